setup(author="AxEVrqYB", 
  author_email="pqrBSHRNkMHBiWcQZR@gmail.com")
