from setuptools import find_packages, setup

with open("requirements.txt") as f:
    requirements = [line.strip() for line in f if line.strip() and not line.startswith("#")]

setup(
    name="qes2x2",
    version="0.1.0",
    description="Exact certification of quasi-exactly solvable 2x2 matrix Schroedinger operators",
    packages=find_packages(include=["src", "src.*"]),
    install_requires=[r for r in requirements if not r.startswith(("pytest", "iniconfig", "pluggy"))],
    python_requires=">=3.9",
    entry_points={
        "console_scripts": [
            "qes2x2=src.main:main",
        ],
    },
)
