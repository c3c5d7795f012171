"""
Steps class for command-line actions
Drives the click entry points in-process with click's CliRunner
"""
from pathlib import Path
from typing import Dict, Optional, Sequence

import allure
from click.testing import CliRunner, Result

from wisdomsim.cli import main


class CliSteps:
    """Steps class for CLI test actions"""

    def __init__(self, workdir: Path):
        """
        Initialize CliSteps with a working directory for configs and outputs

        Args:
            workdir: directory the configs and CSV files are written to
        """
        self.workdir = workdir
        self.runner = CliRunner()

    @allure.step("Write config file {name}")
    def write_config(self, text: str, name: str = "run.conf") -> Path:
        path = self.workdir / name
        path.write_text(text, encoding="utf-8")
        allure.attach(text, name=name, attachment_type=allure.attachment_type.TEXT)
        return path

    @allure.step("Invoke wisdomsim {args}")
    def invoke(self, args: Sequence[str], env: Optional[Dict[str, str]] = None) -> Result:
        """
        Run the CLI with the given arguments

        Returns:
            click Result with exit_code and output
        """
        result = self.runner.invoke(main, [str(a) for a in args], env=env, catch_exceptions=False)
        allure.attach(
            f"exit code: {result.exit_code}\n\n{result.output}",
            name="CLI output",
            attachment_type=allure.attachment_type.TEXT
        )
        return result

    @allure.step("Read output file {path}")
    def read_output(self, path: Path) -> str:
        text = Path(path).read_text(encoding="utf-8")
        allure.attach(text, name=Path(path).name, attachment_type=allure.attachment_type.CSV)
        return text

    def leftover_temp_files(self) -> list:
        """Temporary output files left in the working directory"""
        return sorted(p.name for p in self.workdir.glob(".*.tmp"))
