"""Setup."""

import codecs
import os
import re
import setuptools
import sys

if sys.version_info < (3, 9):
    raise RuntimeError("Python3.9+ is needed")

here = os.path.abspath(os.path.dirname(__file__))


def read(*parts):
    """Read file in `part.part.part.part.ext`.

    Start from `here` and follow the path given by `*parts`
    """
    with codecs.open(os.path.join(here, *parts), 'r') as fp:
        return fp.read()


def find_information(info, *file_path_parts):
    """Read information in file."""
    version_file = read(*file_path_parts)
    version_match = re.search(
        r"^__{info}__ = ['\"]([^'\"]*)['\"]".format(
            info=info
        ),
        version_file,
        re.M
    )
    if version_match:
        return version_match.group(1)
    raise RuntimeError("Unable to find version string.")


with open("README.md", "r") as readme_file:
    long_description = readme_file.read()

setuptools.setup(
    name='stagrover',
    version=find_information("version", "stagrover", "__init__.py"),
    author=find_information("author", "stagrover", "__init__.py"),
    author_email=find_information("email", "stagrover", "__init__.py"),
    description=(
        "Shortcuts to adiabaticity for the adiabatic Grover search: "
        "optimized schedules, counterdiabatic driving and invariant-based "
        "inverse engineering."
    ),
    license=find_information("license", "stagrover", "__init__.py"),
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=['tests']),
    platforms=['any'],
    install_requires=[
        'numpy',
        'scipy>=1.12',
    ],
    extras_require={
        'test': ['pytest'],
    },
    entry_points={
        'console_scripts': [
            'stagrover = stagrover.cli:run_from_command_line',
        ],
    },
    python_requires=">=3.9",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: GNU General Public License v3 (GPLv3)",
        "Natural Language :: English",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3 :: Only",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    keywords='adiabatic quantum computation grover counterdiabatic',
    include_package_data=True,
)
