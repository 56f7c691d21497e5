from setuptools import setup, find_packages

setup(
    name='rearrangeflow',
    version='0.1.0',
    packages=find_packages(include=['rearrangeflow', 'rearrangeflow.*']),
    include_package_data=True,
    python_requires='>=3.10',
    install_requires=[
        'numpy>=2.2',
        'scipy>=1.14.0',
        'networkx>=3.3',
        'python-dotenv>=1.0.1',
        'werkzeug>=3.1.3'
    ],
    extras_require={
        'test': ['pytest>=8.0'],
    },
    entry_points={
        'console_scripts': [
            'rearrangeflow=rearrangeflow.main:main',
        ],
    },
)
