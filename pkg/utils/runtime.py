"""Runtime directory management for psflow.

All runtime data is stored under ~/.psflow/ directory:
- config: Configuration file (created by config.py on first import)
- logs/: Log files (only created with --verbose)
"""

import os

RUNTIME_DIR = os.path.join(os.path.expanduser("~"), ".psflow")


def get_runtime_dir() -> str:
    """Get the runtime directory path.

    Returns:
        Path to ~/.psflow directory
    """
    return RUNTIME_DIR


def get_config_file() -> str:
    """Get the configuration file path.

    Returns:
        Path to ~/.psflow/config
    """
    return os.path.join(get_runtime_dir(), "config")


def get_log_dir() -> str:
    """Get the log directory path.

    Returns:
        Path to ~/.psflow/logs/
    """
    return os.path.join(get_runtime_dir(), "logs")


def ensure_runtime_dirs(create_logs: bool = False) -> None:
    """Ensure runtime directories exist.

    Note: ~/.psflow/config is created by config.py on first import.

    Args:
        create_logs: Whether to create the logs directory (for --verbose mode)
    """
    if create_logs:
        os.makedirs(get_log_dir(), exist_ok=True)
