from setuptools import find_packages, setup

setup(
    name='vech2bekk',
    version='0.1.0',
    description='Robust truncated l1-penalised BEKK-ARCH estimation through the vech-VAR form',
    packages=find_packages(exclude=('tests', 'tests.*', 'examples', 'examples.*')),
    python_requires='>=3.8',
    install_requires=[
        'numpy>=1.24',
        'scipy>=1.10',
        'pandas>=2.0',
        'joblib>=1.3',
    ],
    extras_require={'test': ['pytest>=7.4']},
    entry_points={'console_scripts': ['vech2bekk=vech2bekk.cli:main']},
)
