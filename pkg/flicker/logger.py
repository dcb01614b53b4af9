#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Logging module for flicker"""

import argparse
import io
import logging


# https://stackoverflow.com/questions/61324536/python-argparse-with-argumentdefaultshelpformatter-and-rawtexthelpformatter
class UltimateHelpFormatter(
    argparse.RawTextHelpFormatter, argparse.ArgumentDefaultsHelpFormatter
): ...


class TqdmToLogger(io.StringIO):
    """
    Output stream for TQDM which will output to logger module instead of
    the StdOut.
    """

    logger = None
    level = None
    buf = ""

    def __init__(self, logger: logging.Logger, level: int = None):
        super().__init__()
        self.logger = logger
        self.level = level or logging.INFO

    def write(self, buf: str) -> int:
        self.buf = buf.strip("\r\n\t ")
        return len(buf)

    def flush(self):
        if self.buf:
            self.logger.log(self.level, self.buf)


class CustomFormatter(logging.Formatter):
    """Colour the level tag of each record"""

    grey = "\x1b[38;20m"
    blue = "\x1b[34;20m"
    green = "\x1b[32;20m"
    yellow = "\x1b[33;20m"
    red = "\x1b[31;20m"
    bold_red = "\x1b[31;1m"
    reset = "\x1b[0m"
    format_str = "%(asctime)s.%(msecs)03d %(module)s - %(funcName)s: %(message)s"

    FORMATS = {
        logging.DEBUG: f"{blue}FLICKER-%(levelname)s{reset} {format_str}",
        logging.INFO: f"{green}FLICKER-%(levelname)s{reset} {format_str}",
        logging.WARNING: f"{yellow}FLICKER-%(levelname)s{reset} {format_str}",
        logging.ERROR: f"{red}FLICKER-%(levelname)s{reset} {format_str}",
        logging.CRITICAL: f"{bold_red}FLICKER-%(levelname)s{reset} {format_str}",
    }

    def format(self, record: logging.LogRecord) -> str:
        log_fmt = self.FORMATS.get(record.levelno)
        formatter = logging.Formatter(log_fmt, "%Y-%m-%d %H:%M:%S")
        return formatter.format(record)


def get_flicker_logger(
    name: str = "flicker", attach_handler: bool = True
) -> logging.Logger:
    """Will construct a logger object.

    Warnings raised through the ``warnings`` module are routed to logging as well.

    Args:
        name (str, optional): Name of the logger. Defaults to 'flicker'.
        attach_handler (bool, optional): Attaches a custom StreamHandler. Defaults to True.

    Returns:
        logging.Logger: The appropriate logger
    """
    logging.captureWarnings(True)
    logger = logging.getLogger(name)
    logger.setLevel(logging.WARNING)

    if attach_handler and not logger.handlers:
        ch = logging.StreamHandler()
        ch.setLevel(logging.DEBUG)
        ch.setFormatter(CustomFormatter())
        logger.addHandler(ch)

    return logger


logger = get_flicker_logger()


def set_verbosity(verbose: bool = False, debug: bool = False) -> int:
    """Set the package logger to INFO (``-v``), DEBUG (``--debug``) or back to WARNING.

    Returns:
        int: The level now in effect
    """
    if debug:
        logger.setLevel(logging.DEBUG)
    elif verbose:
        logger.setLevel(logging.INFO)
    else:
        logger.setLevel(logging.WARNING)
    return logger.getEffectiveLevel()


def progress_disabled() -> bool:
    """Progress bars are only drawn when INFO records would be shown."""
    return logger.getEffectiveLevel() > logging.INFO
