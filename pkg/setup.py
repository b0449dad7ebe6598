from setuptools import find_packages, setup

with open("requirements.txt", encoding="utf-8-sig") as f:
    requirements = [line.strip() for line in f if line.strip() and not line.startswith("#")]

setup(
    name="credal-conformal",
    version="0.1.0",
    description="Conformal credal regions, imprecise highest-density prediction sets and "
                "entropy-based uncertainty decomposition",
    packages=find_packages(include=["src", "src.*"]),
    py_modules=["main"],
    python_requires=">=3.9",
    install_requires=[r for r in requirements if not r.startswith(("pytest", "flake8", "black", "hypothesis"))],
    extras_require={
        "dev": [r for r in requirements if r.startswith(("pytest", "flake8", "black", "hypothesis"))],
    },
    entry_points={
        "console_scripts": [
            "credal=src.cli.commands:cli",
        ],
    },
)
