subprocess.check_call([sys.executable,
    'qrcodegen.py'])
