from setuptools import find_packages, setup

setup(
    name="evtrack",
    packages=find_packages(),
)
