import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from config_manager import ConfigManager
from wavelab.artifacts import ArtifactStore, compare_outputs, load_manifest
from wavelab.core.errors import ConfigError, InconclusiveError, SolverError
from wavelab.core.models import ExperimentConfig
from wavelab.experiments import ExperimentRunner
from wavelab.profiles import list_profiles

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s %(levelname)s %(name)s %(message)s",
)
LOGGER = logging.getLogger("wavelab")

EXIT_PASS = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def exit_code_for(exc: BaseException) -> int:
    """Mapeia exceções para códigos de saída (a ordem importa: CausalityError também é ValueError)."""
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (SolverError, InconclusiveError)):
        return EXIT_SOLVER
    if isinstance(exc, AssertionError):
        return EXIT_ASSERTION
    if isinstance(exc, ValueError):
        return EXIT_CONFIG
    return EXIT_SOLVER


async def run_config(config: ExperimentConfig, output_dir: Path, echo: Optional[dict] = None) -> int:
    runner = ExperimentRunner()
    store = ArtifactStore(output_dir)
    outcome = await runner.run(config, store, echo)
    return EXIT_PASS if outcome.passed else EXIT_ASSERTION


def command_run(args: argparse.Namespace) -> int:
    try:
        manager = ConfigManager(Path(args.config))
    except ConfigError as exc:
        LOGGER.error("Configuração inválida: %s", exc)
        return EXIT_CONFIG
    try:
        return asyncio.run(run_config(manager.config, manager.output_dir, manager.raw))
    except Exception as exc:
        LOGGER.error("Experimento falhou: %s", exc, exc_info=True)
        return exit_code_for(exc)


def command_profiles(args: argparse.Namespace) -> int:
    for profile in list_profiles(args.filter or ""):
        print(f"{profile.name:14s} ordem {profile.compat_order}  {profile.description}")
    return EXIT_PASS


def command_verify(args: argparse.Namespace) -> int:
    manifest_path = Path(args.manifest)
    try:
        manifest = load_manifest(manifest_path)
        config = ExperimentConfig.from_dict(manifest["config"])
    except (OSError, ValueError, KeyError) as exc:
        LOGGER.error("Manifesto ilegível: %s", exc)
        return EXIT_CONFIG
    source = manifest_path.parent
    target = source.with_name(source.name + "_verify")
    try:
        asyncio.run(run_config(config, target, manifest["config"]))
    except Exception as exc:
        LOGGER.error("Reexecução falhou: %s", exc, exc_info=True)
        return exit_code_for(exc)
    result = compare_outputs(manifest.get("outputs", {}), target)
    mismatches = [name for name, same in result.items() if not same]
    for name in mismatches:
        LOGGER.error("Saída divergente: %s", name)
    LOGGER.info("Verificação: %d arquivos comparados, %d divergentes", len(result), len(mismatches))
    return EXIT_PASS if not mismatches else EXIT_ASSERTION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavelab", description="Laboratório da equação de onda exterior")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="executa um experimento a partir de um JSON")
    run.add_argument("config")
    run.set_defaults(handler=command_run)

    profiles = sub.add_parser("profiles", help="lista o catálogo de perfis")
    profiles.add_argument("filter", nargs="?", default="")
    profiles.set_defaults(handler=command_profiles)

    verify = sub.add_parser("verify", help="reexecuta um manifesto e compara as saídas")
    verify.add_argument("manifest")
    verify.set_defaults(handler=command_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
