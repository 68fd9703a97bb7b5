from setuptools import setup

setup(
    name="tinyqueue",
    version="0.2.3",
    description="A persistent FIFO queue stored in a single SQLite file",
    author="Oskar Lindqvist",
    author_email="oskar.lindqvist@telia.se",
    packages=["tinyqueue"],
)
