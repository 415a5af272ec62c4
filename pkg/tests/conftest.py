import json
from pathlib import Path

import pytest

from ragforge.mock_server import MockServer
from ragforge.pdfwriter import write_pdf

HERE = Path(__file__).parent
SCENARIOS = HERE / "scenarios"

# (file name, planted fact, question built from the fact's own tokens)
PLANTED_FACTS = [
    ("fact_00.txt", "The capital of Zorvania is Quellmoor.", "what is the capital of Zorvania"),
    ("fact_01.pdf", "The Brindlewick river drains into Lake Tarrowmere.", "where does the Brindlewick river drain"),
    ("fact_02.txt", "Professor Yelland Oakhurst discovered the mineral kestrelite in 1894.", "who discovered the mineral kestrelite"),
    ("fact_03.pdf", "The Halvorsen engine burns compressed vintrel gas.", "what does the Halvorsen engine burn"),
    ("fact_04.txt", "Ambassador Petrucci signed the Velmont accord on a Tuesday.", "who signed the Velmont accord"),
    ("fact_05.pdf", "The glimmerfin trout spawns only beneath frozen lakes.", "where does the glimmerfin trout spawn"),
    ("fact_06.txt", "Sculptor Ines Korvath carved the Ashgrove monument from basalt.", "what did Ines Korvath carve"),
    ("fact_07.pdf", "The Quillon protocol encrypts packets with rotating saltkeys.", "what does the Quillon protocol encrypt"),
    ("fact_08.txt", "Orchard keepers in Dunmarsh harvest silverplums every autumn.", "what do orchard keepers in Dunmarsh harvest"),
    ("fact_09.pdf", "The starship Calypsian Dawn launched from Meridian dock.", "where did the starship Calypsian Dawn launch"),
]

FILLER = (
    "This entry belongs to a survey archive compiled for the annual regional gazetteer "
    "and is kept with the other records of the collection."
)


def write_planted_corpus(directory: Path) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    for name, fact, _ in PLANTED_FACTS:
        body = f"{fact} {FILLER}"
        if name.endswith(".pdf"):
            write_pdf(directory / name, [body], title=name)
        else:
            (directory / name).write_text(body, encoding="utf-8")
    return directory


@pytest.fixture
def planted_corpus(tmp_path):
    return write_planted_corpus(tmp_path / "corpus")


@pytest.fixture
def mock_server():
    """Factory: start a MockServer from a scenario dict or scenario file name."""
    servers = []

    def start(scenario=None):
        if isinstance(scenario, str):
            scenario = json.loads((SCENARIOS / scenario).read_text())
        server = MockServer(scenario).start()
        servers.append(server)
        return server

    yield start
    for server in servers:
        server.stop()


def dead_endpoint() -> str:
    """A localhost URL with nothing listening."""
    import socket

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    return f"http://127.0.0.1:{port}"


# acceptance reporting: one line per criterion at the end of the run

_criteria: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "passed": True, "ran": False})
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        entry["ran"] = True
        if report.outcome != "passed":
            entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "PASS" if entry["passed"] and entry["ran"] else "FAIL"
        terminalreporter.write_line(f"AC{number} {status}  {entry['title']}")
