import setuptools

_package_name = "parea"

with open("README.md", "r") as f:
    long_description = f.read()

setuptools.setup(name=_package_name,
      version="0.1.0",
      description="Split Bregman solver and stability experiments for weighted p-area minimization",
      long_description=long_description,
      long_description_content_type="text/markdown",
      packages=setuptools.find_packages(exclude=["tests", "examples", "examples.*"]),
      license="BSD",
      install_requires=[
          "numpy>=1.17",
          "scipy>=1.4",
      ],
      extras_require={
          "test": ["pytest"],
          "docs": ["sphinx"],
      },
      entry_points={
          "console_scripts": ["parea=parea.cli:main"],
      },
      classifiers=[
          "Development Status :: 3 - Alpha",
          "Intended Audience :: Science/Research",
          "License :: OSI Approved :: BSD License",
          "Operating System :: OS Independent",
          "Programming Language :: Python :: 3",
          "Topic :: Scientific/Engineering :: Mathematics",
      ],
      python_requires=">=3.8"
      )
