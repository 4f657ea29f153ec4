"""
Starter experiment configurations shipped with the package
"""
import shutil
from pathlib import Path
from typing import List

from rich.console import Console

# Template directory is relative to this file
TEMPLATE_DIR = Path(__file__).parent / "configs"
console = Console()


def available_templates() -> List[str]:
    """Names of the packaged starter configs, without the ``.conf`` suffix."""
    return sorted(p.stem for p in TEMPLATE_DIR.glob("*.conf"))


def get_template_path(name: str) -> Path:
    """
    Get the path to the starter config with the given name

    Args:
        name: The template name (e.g., "theorem1")

    Returns:
        Path to the ``.conf`` file
    """
    return TEMPLATE_DIR / f"{name}.conf"


def generate_template(name: str, output_path: Path) -> Path:
    """
    Copy a starter config into a directory

    Args:
        name: The template name (e.g., "theorem1")
        output_path: Directory to write the file to

    Returns:
        Path of the written config
    """
    template_path = get_template_path(name)

    if not template_path.exists():
        console.print(f"[bold red]Error: Template not found for {name}[/bold red]")
        raise ValueError(f"Template not found for {name}")

    output_path.mkdir(parents=True, exist_ok=True)
    target_file = output_path / template_path.name
    shutil.copy2(template_path, target_file)
    console.print(f"[green]Created: {target_file}[/green]")
    return target_file
