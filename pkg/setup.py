from setuptools import setup

setup(
    name="sfs",
    version="0.0.1",
    description="Attractors of function systems and of lifted subdivision schemes",
    packages=["scripts", "scripts.sfs"],
    entry_points={"console_scripts": ["sfs=scripts.cli:app"]},
)
