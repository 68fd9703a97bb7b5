import os
import re

from setuptools import find_packages, setup

here = os.path.abspath(os.path.dirname(__file__))

with open(os.path.join(here, "README.md"), encoding="utf-8") as fh:
    long_description = fh.read()

with open(os.path.join(here, "tidyledger", "__init__.py"), encoding="utf-8") as fh:
    version = re.search(r'__version__ = "([^"]+)"', fh.read()).group(1)

setup(
    name="tidyledger",
    version=version,
    description="Plain-text double-entry bookkeeping helpers",
    long_description=long_description,
    long_description_content_type="text/markdown",
    author="Marta Oliveira",
    author_email="marta.oliveira@example.org",
    license="MIT",
    packages=find_packages(exclude=["tests"]),
    python_requires=">=3.8",
    install_requires=["python-dateutil>=2.8"],
    entry_points={"console_scripts": ["tidyledger=tidyledger.cli:main"]},
)
