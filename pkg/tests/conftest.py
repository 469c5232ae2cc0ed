from pathlib import Path

import pytest

PROGRAMS_DIR = Path(__file__).resolve().parent.parent / "programs"

BUNDLED = sorted(PROGRAMS_DIR.glob("*.nd"))


def bundled_path(name: str) -> Path:
    return PROGRAMS_DIR / name


def bundled_source(name: str) -> str:
    return bundled_path(name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def programs_dir():
    return PROGRAMS_DIR
