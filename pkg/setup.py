from setuptools import setup, find_packages

setup(
    name="terrain_gan",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    package_data={"config": ["config.yaml", "presets/*.yaml"]},
    install_requires=[
        "torch",
        "numpy",
        "pandas",
        "pillow",
        "opencv-python",
        "matplotlib",
        "seaborn",
        "pyyaml",
        "python-dotenv",
        "tqdm",
        "loguru",
    ],
    entry_points={
        "console_scripts": [
            "terrain-gan=app.cli:main",
        ],
    },
)
