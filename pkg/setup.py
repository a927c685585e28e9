# -*- coding: utf-8 -*-

import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()

setuptools.setup(
    name="cutoff-profiles",
    version="0.3.0",                        # keep in step with cutoff/util.py VERSION
    description="Exact total-variation mixing curves and limit-profile sandwiches for Markov chains",
    include_package_data=True,
    long_description=long_description,
    long_description_content_type="text/markdown",
    python_requires=">=3.9",
    install_requires=[
        'numpy',
        'scipy',
        'bitarray'
    ],
    extras_require={
        'tests': ['pytest', 'mpmath', 'jsonschema'],
    },
    entry_points={
        'console_scripts': ['cutoff=cutoff.run:main'],
    },
    packages=setuptools.find_packages(exclude=['tests', 'examples', 'examples.*'])
)
