"""setuptools setup module for biastailor.

Docs:
https://packaging.python.org/en/latest/distributing.html
https://setuptools.readthedocs.io/
"""
from setuptools import setup, find_packages


setup(name='biastailor',
      version='0.1',
      description='XZZX surface code memory experiments under biased circuit-level noise',
      long_description=open('README.md').read(),
      long_description_content_type='text/markdown',
      packages=find_packages(),
      py_modules=['cli'],
      include_package_data=True,
      license='Public domain',
      classifiers=[
          'Development Status :: 3 - Alpha',
          'Intended Audience :: Science/Research',
          'License :: Public Domain',
          'Programming Language :: Python :: 3',
          'Programming Language :: Python :: 3.7',
          'Programming Language :: Python :: 3.8',
          'Topic :: Scientific/Engineering :: Physics',
      ],
      keywords='quantum error correction surface code XZZX biased noise threshold decoder matching',
      python_requires='>=3.7',
      install_requires=[
          'humanfriendly>=4.18,<10.0',
          'jinja2~=2.10',
          'markupsafe<2.1',  # jinja2 2.x imports markupsafe.soft_unicode
          'networkx>=2.4',
          'numpy>=1.17',
          'oauth-dropins>=3.0',
          'scipy>=1.4',
      ],
      tests_require=[
          'hypothesis>=5.0',
          'mox3>=0.28,<2.0',
      ],
      entry_points={
          'console_scripts': ['biastailor = cli:main'],
      },
)
