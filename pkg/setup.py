"""
Setup script for the wisdomsim project
"""
from setuptools import setup, find_packages

setup(
    name="wisdom-sim",
    version="1.0.0",
    description="Social-influence opinion dynamics and wisdom-of-crowds parameter sweeps",
    packages=find_packages(include=["wisdomsim", "wisdomsim.*"]),
    install_requires=[
        "numpy>=1.20",
        "scipy>=1.7",
        "pandas>=1.5",
        "click>=8.2",
        "python-dotenv==1.0.0",
    ],
    extras_require={
        "test": [
            "pytest==7.4.3",
            "pytest-html==4.1.1",
            "pytest-xdist==3.5.0",
            "allure-pytest==2.13.2",
        ],
    },
    entry_points={
        "console_scripts": [
            "wisdomsim=wisdomsim.cli:run",
        ],
    },
    python_requires=">=3.9",
)
