from setuptools import setup

setup(
    name="inifold",
    version="0.9.2",
    description="Merge layered INI configuration files with precedence rules",
    author="Tomasz Nowak",
    author_email="tnowak@poczta.onet.pl",
    packages=["inifold"],
    install_requires=["PyYAML>=5.1"],
    extras_require={"dev": ["pytest"]},
)
