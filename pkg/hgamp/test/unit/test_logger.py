"""Test logging module."""

import json
import logging

import colorama
import pytest

from hgamp import logger


def _colored(color, level, message):
    return (
        f"{color}{colorama.Style.BRIGHT}{level}:{colorama.Style.NORMAL} {message}\n"
        f"{colorama.Style.RESET_ALL}"
    )


def test_flag_extra():
    flagged = logger.flag_extra({"instance": "20-5-1a", "iteration": 3})

    assert flagged == {"hgamp_instance": "20-5-1a", "hgamp_iteration": 3}


@pytest.mark.parametrize(
    ("method", "color", "level"),
    [
        ("critical", colorama.Fore.RED, "CRITICAL"),
        ("error", colorama.Fore.RED, "ERROR"),
    ],
)
def test_stderr_levels(capsys, method, color, level):
    log = logger.get_logger(f"test_{method}")
    getattr(log, method)("repair gave up")
    _, stderr = capsys.readouterr()

    assert stderr == _colored(color, level, "repair gave up")


@pytest.mark.parametrize(
    ("method", "color", "level"),
    [
        ("warning", colorama.Fore.YELLOW, "WARNING"),
        ("info", colorama.Fore.BLUE, "INFO"),
        ("debug", colorama.Fore.WHITE, "DEBUG"),
    ],
)
def test_stdout_levels(capsys, method, color, level):
    log = logger.get_logger(f"test_{method}")
    getattr(log, method)("new best 54793")
    stdout, _ = capsys.readouterr()

    assert stdout == _colored(color, level, "new best 54793")


def test_update_logger_level(capsys):
    log = logger.get_logger("test_update_level")
    logger.update_logger(log, "WARNING", False)
    log.info("hidden")
    log.warning("shown")
    stdout, _ = capsys.readouterr()

    assert "hidden" not in stdout
    assert "shown" in stdout


def test_json_output(capsys):
    log = logger.get_logger("test_json")
    logger.update_logger(log, logging.INFO, True)
    log.info("restart\nnow", extra=logger.flag_extra({"instance": "tiny"}))
    stdout, _ = capsys.readouterr()

    record = json.loads(stdout)
    assert record["message"] == "restart now"
    assert record["hgamp_instance"] == "tiny"
    assert record["levelname"] == "INFO"


def test_markup_detection_pycolors0(monkeypatch):
    monkeypatch.setenv("PY_COLORS", "0")
    assert not logger._should_do_markup()


def test_markup_detection_pycolors1(monkeypatch):
    monkeypatch.setenv("PY_COLORS", "1")
    assert logger._should_do_markup()


def test_markup_detection_tty_yes(mocker):
    mocker.patch("sys.stdout.isatty", return_value=True)
    mocker.patch("os.environ", {"TERM": "xterm"})
    assert logger._should_do_markup()


def test_markup_detection_tty_no(mocker):
    mocker.patch("os.environ", {})
    mocker.patch("sys.stdout.isatty", return_value=False)
    assert not logger._should_do_markup()
