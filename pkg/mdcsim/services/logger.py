import logging
import os
import sys

from mdcsim.core.config import settings

LOGGER_NAMES = ("simulation", "placement", "mobility")

simulation_logger = logging.getLogger("simulation")
placement_logger = logging.getLogger("placement")
mobility_logger = logging.getLogger("mobility")

formatter = logging.Formatter(
    "[%(asctime)s] [%(levelname)s] [%(name)s] %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S"
)

_configured = False


def configure_logging(level: str | None = None, log_dir: str | None = None, to_file: bool | None = None) -> None:
    """Attach stderr and (optionally) per-area file handlers, once per process."""
    global _configured
    level = (level or settings.LOG_LEVEL).upper()
    log_dir = log_dir or settings.LOG_DIR
    to_file = settings.LOG_TO_FILE if to_file is None else to_file

    for name in LOGGER_NAMES:
        logger = logging.getLogger(name)
        logger.setLevel(level)
        logger.propagate = False

        # Add handlers only once
        if _configured and logger.handlers:
            for handler in logger.handlers:
                handler.setLevel(level)
            continue

        stream_handler = logging.StreamHandler(sys.stderr)
        stream_handler.setLevel(level)
        stream_handler.setFormatter(formatter)
        logger.addHandler(stream_handler)

        if to_file:
            os.makedirs(log_dir, exist_ok=True)
            file_handler = logging.FileHandler(os.path.join(log_dir, f"{name}.log"), encoding="utf-8")
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

    _configured = True


# --- Helper functions ---

def log_stage(stage: str, message: str):
    simulation_logger.info(f"[{stage}] {message}")


def log_session(t: float, mdc_id: int, agent_id: int, service: str, outcome: str, pu_index: int | None = None):
    simulation_logger.debug(
        f"t={t:.3f} | mdc={mdc_id} | agent={agent_id} | service={service} | {outcome} | pu={pu_index}"
    )


def log_rejection(t: float, mdc_id: int, agent_id: int, service: str, rejected_total: int):
    simulation_logger.debug(
        f"t={t:.3f} | mdc={mdc_id} | agent={agent_id} | service={service} rejected (total={rejected_total})"
    )


def log_handover(t: float, agent_id: int, old_mdc: int, new_mdc: int):
    simulation_logger.debug(f"t={t:.3f} | agent={agent_id} | handover {old_mdc}->{new_mdc}")


def log_kmeans_iteration(k: int, iteration: int, inertia: float, shift: float):
    placement_logger.debug(f"k={k} | iter={iteration} | inertia={inertia:.6g} | max_shift={shift:.6g}")

