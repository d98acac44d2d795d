import ast
import os

from setuptools import setup, find_packages


def get_version():
    with open(os.path.join('hycert', 'version.py')) as f:
        tree = ast.parse(f.read(), f.name)
        for node in ast.walk(tree):
            if not (isinstance(node, ast.Assign) and len(node.targets) == 1):
                continue
            target, = node.targets
            value = node.value
            if not (isinstance(target, ast.Name) and
                    target.id == 'VERSION_INFO' and
                    isinstance(value, ast.Tuple)):
                continue
            elts = value.elts
            if any(not isinstance(elt, ast.Constant) for elt in elts):
                continue
            return '.'.join(str(elt.value) for elt in elts)


def readme():
    with open('README.md') as f:
        return f.read()


setup(
    name='hycert',
    version=get_version(),
    description='Safety certificates for interval polynomial hybrid systems',
    long_description=readme(),
    long_description_content_type='text/markdown',
    packages=find_packages(exclude=['tests']),
    python_requires='>=3.8',
    include_package_data=False,
    zip_safe=False,
    install_requires=[
        'click==8.1.7',
        'gevent==23.9.1',
        'werkzeug==2.3.8',
        'typeguard==2.13.3',
        'numpy==1.26.4',
        'scipy==1.11.4',
        'sympy==1.12',
        'mpmath==1.3.0',
        'cvxopt==1.3.2',
    ],
    extras_require={
        'dev': [
            'pytest==7.4.4',
            'pytest-mock==3.12.0',
            'hypothesis==6.92.1',
            'tox==4.11.4',
            'flake8==6.1.0',
        ]
    },
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'Programming Language :: Python :: 3 :: Only',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    entry_points="""
        [console_scripts]
        hycert=hycert.cli:main
    """
)
