from .cli import run, main, build_parser
