"""Protocol files shipped with the package."""
from importlib import resources

NAMES = ("bit-commitment", "teleport", "superdense", "swap", "swap-net", "qpass")


def source(name: str) -> str:
    """Text of a bundled protocol, by name with or without ``.qam``."""
    stem = name[:-4] if name.endswith(".qam") else name
    if stem not in NAMES:
        raise KeyError(f"no bundled protocol {name!r}; known: {', '.join(NAMES)}")
    return resources.files(__name__).joinpath(stem + ".qam").read_text(encoding="utf-8")


def load(name: str):
    from ..syntax import parse
    return parse(source(name))
