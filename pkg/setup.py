#!/usr/bin/env python

from setuptools import setup, find_namespace_packages

setup(
    name="chemolab",
    version="0.1.0",
    description="Numerical laboratory for a chemotaxis-consumption-growth system with Robin boundary conditions",
    author="The chemolab authors",
    packages=find_namespace_packages(include=["chemolab*"]),
    install_requires=["jinja2", "numpy", "scipy>=1.12"],
    extras_require={
        "development": ["pytest", "pytest-cov", "pytest-asyncio", "flake8", "pylint", "sphinx-rtd-theme"]
    },
    entry_points={
        "console_scripts": ["chemolab=chemolab.cli:main"],
    },
    include_package_data=True,
    python_requires=">=3.9",
    license="GPLv3",
    platforms="OS Independent",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: GNU General Public License v3 (GPLv3)",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python",
        "Topic :: Scientific/Engineering :: Mathematics",
    ]
)
