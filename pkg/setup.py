#!/usr/bin/env python

from setuptools import setup, find_packages
import os

from version import __version__

here = os.path.abspath(os.path.dirname(__file__))
with open(os.path.join(here, 'README.md')) as f:
    README = f.read()

requires = ['numpy>=1.17', 'scipy>=1.4']

setup(name='python-daehlib',
      version=__version__,
      description='Degree, resonance and periodic-orbit tools for periodically perturbed semi-explicit DAEs',
      long_description=README,
      long_description_content_type='text/markdown',
      classifiers=[
          "Programming Language :: Python",
          "Programming Language :: Python :: 3",
          "Topic :: Scientific/Engineering :: Mathematics",
          "License :: OSI Approved :: GNU Lesser General Public License v3 or later (LGPLv3+)",
      ],
      keywords='dae periodic-orbits degree-theory continuation',
      packages=find_packages(exclude=['examples', 'examples.*']),
      package_data={'daeh.tests': ['data/*.json']},
      zip_safe=False,
      install_requires=requires,
      python_requires='>=3.6',
      entry_points={'console_scripts': ['daeh=daeh.cli:main']},
      test_suite="daeh.tests"
      )
