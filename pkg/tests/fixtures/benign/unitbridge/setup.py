from setuptools import setup

with open("README.rst") as f:
    readme = f.read()

setup(
    name="unitbridge",
    version="3.1.0",
    description="Convert between metric and imperial units with exact fractions",
    long_description=readme,
    author="Carlos Mendes",
    author_email="cmendes@unitbridge.dev",
    packages=["unitbridge"],
    package_data={"unitbridge": ["units.json"]},
    include_package_data=True,
)
