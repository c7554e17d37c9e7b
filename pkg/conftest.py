# Import the installed ml_harness package up front: when both suites run from
# this rootdir under importlib mode, pytest would otherwise register the
# ml_harness/ project directory as a namespace package and shadow it.
try:
    import ml_harness  # noqa: F401
except ImportError:
    pass
