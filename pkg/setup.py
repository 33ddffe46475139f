from setuptools import find_packages, setup

# Core requirements that are always needed
with open("requirements/common.txt") as f:
    core_requirements = [line.split(";")[0].strip() for line in f.read().splitlines() if line.strip()]

# Development requirements
with open("requirements/dev.txt") as f:
    dev_requirements = [line.split(";")[0].strip() for line in f.read().splitlines() if line.strip()]

setup(
    name="netkernel",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=core_requirements,
    extras_require={
        "dev": dev_requirements,
    },
    entry_points={
        "console_scripts": ["netkernel=netkernel.cli:main"],
    },
    include_package_data=True,
)
