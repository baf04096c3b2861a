from setuptools import setup, find_packages

setup(name='ghzphotonics',
      version='0.1',
      description='Simulation of a four-photon GHZ experiment: witness, tomography, swapping and Hardy tests',
      license='GNU GPLv3',
      packages=find_packages(exclude=['tests']),
      package_data={'ghzphotonics': ['configurations/*.yaml']},
      install_requires=["pymeasure",
                        "numpy",
                        "scipy",
                        "pyyaml",
                        "lmfit"],
      extras_require={'tests': ["pytest"]},
      scripts=['ghz_experiment.py'],
      zip_safe=False)
