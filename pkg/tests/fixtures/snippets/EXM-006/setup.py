call(pythonw + " -m pip install cryptography")
