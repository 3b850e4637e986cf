# -*- coding: utf-8 -*-
from setuptools import find_packages, setup

from vsi_intent import __version__


REQUIREMENTS = [
    'setuptools',
    'Django>=3.1',
    'django-appconf',
    'numpy>=1.20',
    'scikit-learn>=0.24',
    'PyYAML>=5.4',
    'rich>=10.0',
]


CLASSIFIERS = [
    'Development Status :: 4 - Beta',
    'Environment :: Console',
    'Intended Audience :: Developers',
    'Intended Audience :: Science/Research',
    'License :: OSI Approved :: BSD License',
    'Operating System :: OS Independent',
    'Framework :: Django',
    'Framework :: Django :: 3.1',
    'Framework :: Django :: 3.2',
    'Programming Language :: Python',
    'Programming Language :: Python :: 3',
    'Programming Language :: Python :: 3.8',
    'Programming Language :: Python :: 3.9',
    'Programming Language :: Python :: 3.10',
    'Topic :: Scientific/Engineering :: Artificial Intelligence',
    'Topic :: Software Development :: Libraries',
]


setup(
    name='vsi-intent',
    version=__version__,
    license='BSD',
    description='Query intent classification with dense feature memory tokens',
    long_description=open('README.rst').read(),
    packages=find_packages(exclude=['tests']),
    include_package_data=True,
    zip_safe=False,
    install_requires=REQUIREMENTS,
    classifiers=CLASSIFIERS,
    entry_points={
        'console_scripts': [
            'vsi-intent=vsi_intent.cli:main',
        ],
    },
    test_suite='tests.settings.run',
)
