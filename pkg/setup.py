"""
Quantlqg setup script.
"""

import setuptools


def get_long_description():
    """Reads the long project description from the 'README.md' file."""
    with open("README.md", "r", encoding="utf-8") as f:
        return f.read()


def get_requirements():
    """Reads the runtime dependencies from the 'requirements.txt' file."""
    runtime = {"numpy", "scipy", "PyYAML", "PuLP"}
    with open("requirements.txt", "r", encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip() in runtime]


setuptools.setup(
    name="quantlqg",
    author="Mykola Galushka",
    author_email="mm.galushka@gmail.com",
    description=(
        "Quantized-feedback LQG synthesis, quantizer selection "
        "and Monte Carlo validation."
    ),
    long_description=get_long_description(),
    long_description_content_type="text/markdown",
    classifiers=[
        'Intended Audience :: Science/Research',
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
    ],
    package_dir={"": "."},
    packages=setuptools.find_packages(where=".", exclude=["tests"]),
    package_data={"quantlqg": ["settings.yaml"]},
    include_package_data=True,
    install_requires=get_requirements(),
    entry_points={
        "console_scripts": ["quantlqg=quantlqg.cli:run"],
    },
    python_requires=">=3.9",
    use_scm_version=True,
    setup_requires=['setuptools_scm'],
)
