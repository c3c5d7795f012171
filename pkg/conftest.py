"""
Pytest configuration and fixtures for wisdomsim tests
"""
import sys
import platform
from importlib import metadata
from pathlib import Path

import pytest

from steps.cli_steps import CliSteps
from steps.simulation_steps import SimulationSteps
from steps.sweep_steps import SweepSteps
from wisdomsim.logging_setup import reset_logging
from wisdomsim.opinion_model import (
    REFERENCE_AGENTS,
    REFERENCE_DT,
    REFERENCE_LOG_MEANS,
    REFERENCE_LOG_VARIANCE,
    REFERENCE_NOISE_D,
    REFERENCE_STEPS,
    ModelParams,
    PopulationSpec,
)


def _version(distribution: str):
    try:
        return metadata.version(distribution)
    except metadata.PackageNotFoundError:
        return None


def create_allure_environment_file():
    """Create environment.properties file for Allure report"""
    python_version = f"{sys.version_info.major}.{sys.version_info.minor}.{sys.version_info.micro}"
    platform_info = platform.platform()

    packages_info = {name: _version(name) for name in ("numpy", "scipy", "pandas", "click", "pytest")}
    plugins_info = {
        "allure-pytest": _version("allure-pytest"),
        "html": _version("pytest-html"),
        "xdist": _version("pytest-xdist"),
    }

    allure_results_dir = Path('reports/allure-results')
    allure_results_dir.mkdir(parents=True, exist_ok=True)
    env_file = allure_results_dir / 'environment.properties'

    with open(env_file, 'w', encoding='utf-8') as f:
        f.write(f"Python={python_version}\n")
        f.write(f"Platform={platform_info}\n")
        f.write("\n")
        f.write("# Packages\n")
        for pkg_name, pkg_version in packages_info.items():
            if pkg_version:
                f.write(f"Packages.{pkg_name}={pkg_version}\n")
        f.write("\n")
        f.write("# Plugins\n")
        for plugin_name, plugin_version in plugins_info.items():
            if plugin_version:
                f.write(f"Plugins.{plugin_name}={plugin_version}\n")


def pytest_configure(config):
    """Pytest configuration hook - called before test collection"""
    create_allure_environment_file()


@pytest.fixture(scope="function")
def simulation_steps() -> SimulationSteps:
    """SimulationSteps fixture (provides steps instance for each test)"""
    return SimulationSteps()


@pytest.fixture(scope="function")
def sweep_steps() -> SweepSteps:
    """SweepSteps fixture (provides steps instance for each test)"""
    return SweepSteps()


@pytest.fixture(scope="function")
def cli_steps(tmp_path: Path) -> CliSteps:
    """
    CliSteps fixture working in a fresh temporary directory

    Args:
        tmp_path: pytest temporary directory

    Returns:
        CliSteps instance
    """
    yield CliSteps(tmp_path)
    # the CLI installs a stream handler bound to the runner's stderr
    reset_logging()


@pytest.fixture(scope="session")
def reference_population() -> PopulationSpec:
    """N=100 log-normal start with mean ln x = -3 and variance 0.72 exactly"""
    return PopulationSpec(
        n_agents=REFERENCE_AGENTS,
        log_mean=REFERENCE_LOG_MEANS[0],
        log_variance=REFERENCE_LOG_VARIANCE,
        seed=20240601,
        match_moments=True,
    )


@pytest.fixture(scope="session")
def no_info_params() -> ModelParams:
    """alpha=0, beta=1, D=1e-3, dt=0.01, 3000 steps"""
    return ModelParams(alpha=0.0, beta=1.0, noise_d=REFERENCE_NOISE_D, dt=REFERENCE_DT, steps_total=REFERENCE_STEPS)
