from setuptools import setup, find_packages

setup(
    name="deh-harvest",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    py_modules=["main", "config"],
    install_requires=[
        "pydantic>=2.0.0",
        "numpy>=1.22",
        "scipy>=1.8",
    ],
    extras_require={
        "test": [
            "pytest>=7.0",
            "hypothesis>=6.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "deh-harvest=main:main",
        ],
    },
    python_requires=">=3.9",
    author="CompleteTech LLC",
    author_email="info@completetech.example",
    description="Deterministic energy harvesting by a qubit from a quantized field mode: simulation and checks",
    keywords="quantum, jaynes-cummings, energy harvesting, wigner, entropy",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Physics",
        "License :: OSI Approved :: MIT License",
    ],
)
