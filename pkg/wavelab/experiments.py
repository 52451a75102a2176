"""Executor de experimentos nomeados.

Opções aceitas em `options`, por tipo:

run-radial
    M (truncamento), focusing, blowup_threshold, energy_tolerance (1e-4),
    snapshot_stride (0 = sem instantâneos), heatmap (true)
run-penrose
    num_alpha (256), delta (0.2), T_end (1.0), compact_stride (1), nonlinear (true),
    compare (false), compare_tolerance (1e-3), energy_tolerance (1e-3), flux_tolerance (1e-2,
    relativa a E(0)), M (2.0, raio da norma dos dados em E(0)/‖(u0, u1)‖_M)
run-perturb
    ells ([0, 1, 2]), epsilon (1e-2), perturbation (perfil), axisym (n = 3), num_theta (16),
    drift_slack (1e-3)
check-compat
    N (2), strong (true), expect_pass (opcional)
diagnose
    sobolev_k (2), M (2.0), pairs ([[null, 2]] + par de Sobolev δ = 0.5), split (t_end/2)
hardy-test
    trials (10000), scales ([0.5, 1, 2]), scaling_trials (1000), spread_tolerance (0.1),
    kernel_trials (10000), kernel_powers ([7, 8]), kernel_tolerance (1e-8)
sweep
    epsilons ([1e-3, 1e-2, 1e-1]), perturbation (perfil), ell (0), num_theta (16), delta (0.5),
    modes (["linearized", "axisym"]), linear_response_tolerance (0.2), checkpoints (10)
"""

from __future__ import annotations

import asyncio
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Awaitable, Callable, Optional

import numpy as np

from . import compat, diagnostics, penrose, perturbation
from .artifacts import ArtifactStore
from .core.cache import RunCache, make_key
from .core.models import ExperimentConfig, ExperimentKind, Params, RadialState
from .core.norms import sobolev_strichartz_pair
from .profiles import build_data
from .radial_solver import NonlinearitySpec, ObservationLog, detect_blowup, evolve
from .renderer import SpacetimeRenderer

LOGGER = logging.getLogger(__name__)

DEFAULT_PERTURBATION = {"profile": "bump4", "amplitude": 1.0, "width": 1.0, "center": 2.0}


@dataclass
class ExperimentOutcome:
    """Vereditos e métricas de uma execução."""
    kind: ExperimentKind
    checks: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(entry["passed"] for entry in self.checks.values())

    def check(self, name: str, passed: bool, value: Any = None, limit: Any = None) -> bool:
        self.checks[name] = {"passed": bool(passed), "value": value, "limit": limit}
        if not passed:
            LOGGER.warning("Verificação %s falhou: valor %s, limite %s", name, value, limit)
        return bool(passed)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "passed": self.passed, "checks": self.checks, "metrics": self.metrics}


def _state_rows(state: RadialState) -> list[tuple]:
    return list(zip(state.grid.r, state.u, state.v))


def _nonlinearity(config: ExperimentConfig) -> NonlinearitySpec:
    options = config.options
    return NonlinearitySpec(
        config.params.p,
        M=options.get("M"),
        focusing=bool(options.get("focusing", False)),
    )


class ExperimentRunner:
    """Despacha cada tipo de experimento para o seu handler."""

    def __init__(self, cache: Optional[RunCache] = None) -> None:
        self.cache = cache or RunCache()
        self.renderer = SpacetimeRenderer()
        self._handlers: dict[ExperimentKind, Callable[[ExperimentConfig, ArtifactStore, ExperimentOutcome], Awaitable[None]]] = {
            ExperimentKind.RUN_RADIAL: self._run_radial,
            ExperimentKind.RUN_PENROSE: self._run_penrose,
            ExperimentKind.RUN_PERTURB: self._run_perturb,
            ExperimentKind.CHECK_COMPAT: self._check_compat,
            ExperimentKind.DIAGNOSE: self._diagnose,
            ExperimentKind.HARDY_TEST: self._hardy_test,
            ExperimentKind.SWEEP: self._sweep,
        }

    async def run(self, config: ExperimentConfig, store: ArtifactStore, echo: Optional[dict] = None) -> ExperimentOutcome:
        """
        Executa o experimento e grava o manifesto.

        Args:
            config: Configuração validada
            store: Diretório de artefatos
            echo: Documento original para o manifesto (padrão: config.to_dict())

        Returns:
            ExperimentOutcome com as verificações da execução

        Raises:
            WaveLabError: falhas de solver ou de pré-condição; failure.json é gravado antes
        """
        from . import __version__

        outcome = ExperimentOutcome(config.kind)
        started = time.perf_counter()
        LOGGER.info("Iniciando experimento %s em %s", config.kind.value, store.output_dir)
        try:
            await self._handlers[config.kind](config, store, outcome)
        except Exception as exc:
            store.write_failure(exc, echo or config.to_dict())
            raise
        elapsed = time.perf_counter() - started
        store.write_manifest(echo or config.to_dict(), __version__, elapsed, outcome.checks, outcome.passed)
        LOGGER.info("Experimento %s concluído: %s", config.kind.value, "passou" if outcome.passed else "falhou")
        return outcome

    def initial_state(self, config: ExperimentConfig) -> RadialState:
        grid = config.grid
        return RadialState.from_data(grid, build_data(config.data.get("u0"), grid), build_data(config.data.get("u1"), grid))

    def radial_run(self, config: ExperimentConfig, nl: Optional[NonlinearitySpec] = None, stop_above: Optional[float] = None) -> ObservationLog:
        """Evolução radial com instantâneos no stride da configuração, memorizada no cache."""
        nl = nl or _nonlinearity(config)
        key = make_key(
            params=config.params.to_dict(),
            grid=config.grid.to_dict(),
            time=config.time.to_dict(),
            data=config.data,
            p=nl.p,
            M=nl.M,
            focusing=nl.focusing,
            stop_above=stop_above,
        )

        def compute() -> ObservationLog:
            state = self.initial_state(config)
            _, log = evolve(
                state,
                config.time.t_end,
                config.time.resolve_dt(config.grid.h),
                nl,
                config.params,
                stride=config.time.stride,
                keep_snapshots=True,
                raise_on_blowup=not nl.focusing,
                stop_above=stop_above,
            )
            return log

        return self.cache.get_or_compute(key, compute)

    def _heatmap(self, store: ArtifactStore, snapshots: list[np.ndarray], name: str = "heatmap.png") -> None:
        if len(snapshots) >= 2:
            store.write_png(name, self.renderer.render(np.stack(snapshots)))

    async def _run_radial(self, config: ExperimentConfig, store: ArtifactStore, outcome: ExperimentOutcome) -> None:
        options = config.options
        nl = _nonlinearity(config)
        threshold = options.get("blowup_threshold")
        log = await asyncio.to_thread(self.radial_run, config, nl, threshold if nl.focusing else None)

        store.write_csv("energy.csv", ObservationLog.CSV_HEADER, log.to_rows())
        store.write_csv("state_final.csv", ("r", "u", "v"), _state_rows(log.snapshots[-1]))
        snapshot_stride = int(options.get("snapshot_stride", 0))
        if snapshot_stride > 0:
            chosen = log.snapshots[::snapshot_stride]
            store.write_snapshots("snapshot", ("r", "u", "v"), [_state_rows(s) for s in chosen])
            store.write_json("snapshots.json", {"times": [s.t for s in chosen], "params": config.params.to_dict()})
        if options.get("heatmap", True):
            self._heatmap(store, [s.u for s in log.snapshots])

        if nl.focusing:
            verdict = detect_blowup(log, float(threshold if threshold is not None else 1e3))
            outcome.metrics["blowup_time"] = verdict.first_time
            outcome.check("blowup_detected", verdict.exceeded, verdict.first_time, verdict.threshold)
        else:
            drift = log.max_relative_drift()
            tolerance = float(options.get("energy_tolerance", 1e-4))
            outcome.metrics["energy_drift"] = drift
            outcome.check("energy_conservation", drift <= tolerance, drift, tolerance)
            if threshold is not None:
                verdict = detect_blowup(log, float(threshold))
                outcome.check("no_blowup", not verdict.exceeded, verdict.first_time, verdict.threshold)
        store.write_json("summary.json", outcome.to_dict())

    async def _run_penrose(self, config: ExperimentConfig, store: ArtifactStore, outcome: ExperimentOutcome) -> None:
        options = config.options
        params = config.params
        nonlinear = bool(options.get("nonlinear", True))
        cgrid = penrose.CompactGrid(int(options.get("num_alpha", 256)))
        delta = float(options.get("delta", penrose.DEFAULT_DELTA))
        T_end = float(options.get("T_end", 1.0))
        state = self.initial_state(config)
        initial = penrose.compact_slice(state, cgrid, params, delta, nonlinear)
        history = await asyncio.to_thread(penrose.evolve_compact, initial, T_end, None, int(options.get("compact_stride", 1)))

        E = np.array([penrose.energy_E(s) for s in history])
        F = np.array([penrose.energy_F(s) for s in history])
        rows = [
            (s.T, e, f, penrose.boundary_flux(s), penrose.nonlinear_sink(s))
            for s, e, f in zip(history, E, F)
        ]
        store.write_csv("compact_energy.csv", ("T", "E", "F", "boundary_flux", "sink"), rows)
        final = history[-1]
        store.write_csv("compact_final.csv", ("alpha", "U", "W"), list(zip(cgrid.alpha, final.U, final.W)))
        store.write_json("compact_final.json", final.sidecar())
        self._heatmap(store, [s.U for s in history])

        tolerance = float(options.get("energy_tolerance", 1e-3))
        scale = max(float(E[0]), 1e-300)
        rise_E = float(np.max(np.diff(E), initial=0.0)) / scale
        rise_F = float(np.max(np.diff(F), initial=0.0)) / scale
        outcome.metrics.update({"E_initial": float(E[0]), "E_final": float(E[-1]), "max_rise_E": rise_E, "max_rise_F": rise_F})
        outcome.check("E_nonincreasing", rise_E <= tolerance, rise_E, tolerance)
        outcome.check("F_nonincreasing", rise_F <= tolerance, rise_F, tolerance)
        if len(history) >= 3:
            residual = penrose.flux_identity_residual(history) / scale
            flux_limit = float(options.get("flux_tolerance", 1e-2))
            outcome.metrics["flux_identity_residual"] = residual
            outcome.check("flux_identity", residual <= flux_limit, residual, flux_limit)
        M = float(options.get("M", 2.0))
        if M < config.grid.r_max:
            ratio = diagnostics.initial_energy_ratio(float(E[0]), state.u, state.v, config.grid, params, M)
            outcome.metrics["initial_energy_ratio"] = ratio
            LOGGER.info("E(0) / ‖(u0, u1)‖_M = %.6g (M = %g)", ratio, M)

        if options.get("compare", False):
            nl = NonlinearitySpec(params.p) if nonlinear else NonlinearitySpec.linear(params.p)
            log = await asyncio.to_thread(self.radial_run, config, nl)
            spacetime = penrose.RadialSpacetime(log.snapshots)
            comparisons = [penrose.compare_representations(spacetime, s) for s in history]
            store.write_csv(
                "dual.csv",
                ("T", "sup_difference", "compared_nodes"),
                [(c.T, c.sup_difference, c.compared_nodes) for c in comparisons],
            )
            worst = max(c.sup_difference for c in comparisons)
            limit = float(options.get("compare_tolerance", 1e-3))
            outcome.metrics["dual_sup_difference"] = worst
            outcome.check("dual_representation", worst <= limit, worst, limit)
        store.write_json("summary.json", outcome.to_dict())

    async def _run_perturb(self, config: ExperimentConfig, store: ArtifactStore, outcome: ExperimentOutcome) -> None:
        options = config.options
        params = config.params
        grid = config.grid
        log = await asyncio.to_thread(self.radial_run, config, NonlinearitySpec(params.p))
        bg = perturbation.Background.from_log(log, params)
        shape_spec = options.get("perturbation", DEFAULT_PERTURBATION)
        profile = build_data(shape_spec, grid)
        epsilon = float(options.get("epsilon", 1e-2))
        t_end = config.time.t_end
        dt = config.time.resolve_dt(grid.h)

        async def run_mode(ell: int) -> None:
            start = perturbation.ModeState(ell, grid, 0.0, epsilon * profile, np.zeros(grid.num_points))
            history = await asyncio.to_thread(perturbation.evolve_mode, start, bg, params, t_end, dt, config.time.stride)
            drift, bound = perturbation.potential_drift_bound(history, bg, params)
            energies = [perturbation.linearized_energy(s, bg, params) for s in history]
            store.write_csv(
                f"mode_{ell:02d}.csv",
                ("t", "E_lin", "drift", "bound", "sup_w"),
                [(s.t, e, d, b, float(np.max(np.abs(s.w)))) for s, e, d, b in zip(history, energies, drift, bound)],
            )
            slack = float(options.get("drift_slack", 1e-3)) * max(energies[0], 1e-300)
            excess = float(np.max(drift - bound))
            outcome.check(f"mode_{ell}_energy_drift", excess <= slack, excess, slack)

        await asyncio.gather(*(run_mode(int(ell)) for ell in options.get("ells", [0, 1, 2])))

        if options.get("axisym", params.n == 3) and params.n == 3:
            agrid = perturbation.AxisymGrid(grid, int(options.get("num_theta", 16)))
            w0 = agrid.extend(epsilon * profile, int(options.get("ell", 0)))
            history = await asyncio.to_thread(
                perturbation.evolve_axisym, w0, np.zeros_like(w0), agrid, bg, params, t_end, min(dt, agrid.max_dt()), config.time.stride
            )
            final = history[-1]
            rows = [
                (r, theta, final.w[i, j], final.w_t[i, j])
                for i, r in enumerate(grid.r)
                for j, theta in enumerate(agrid.theta)
            ]
            store.write_csv("axisym_final.csv", ("r", "theta", "w", "w_t"), rows)
            store.write_json("axisym_final.json", {"t": final.t, "n": params.n, "p": params.p, "num_theta": agrid.num_theta, "epsilon": epsilon})
            times = np.array([s.t for s in history])
            report = perturbation.gronwall_check(
                perturbation.FieldRun.background_on_axisym(bg, agrid, times),
                perturbation.FieldRun.from_axisym(history, bg),
                params,
            )
            store.write_json("gronwall.json", report.to_dict())
            outcome.check("gronwall_bound", report.satisfied, float(np.max(report.E_w)), None)
        store.write_json("summary.json", outcome.to_dict())

    async def _check_compat(self, config: ExperimentConfig, store: ArtifactStore, outcome: ExperimentOutcome) -> None:
        options = config.options
        params, grid = config.params, config.grid
        N = int(options.get("N", 2))
        state = self.initial_state(config)
        linear = compat.linear_sequence(state.u, state.v, compat.zero_forcing(grid, N), grid, params.n, N)
        nonlinear = compat.nonlinear_sequence(state.u, state.v, grid, params, N)
        payload = {"linear": linear.to_dict(), "nonlinear": nonlinear.to_dict()}
        if options.get("strong", True):
            strong = compat.strong_condition_check(state.u, state.v, grid, params.n, N)
            payload["strong"] = strong
            outcome.check("strong_implies_sequence", (not strong) or nonlinear.passed, strong, nonlinear.passed)
        if "expect_pass" in options:
            expected = bool(options["expect_pass"])
            outcome.check("expected_verdict", nonlinear.passed == expected, nonlinear.passed, expected)
        store.write_csv(
            "compat.csv",
            ("j", "kind", "boundary_value", "passed"),
            [(j, "linear", v, ok) for j, (v, ok) in enumerate(zip(linear.boundary_values, linear.verdicts))]
            + [(j, "nonlinear", v, ok) for j, (v, ok) in enumerate(zip(nonlinear.boundary_values, nonlinear.verdicts))],
        )
        store.write_json("compat.json", payload)
        outcome.metrics["compat_order"] = nonlinear.compat_order

    async def _diagnose(self, config: ExperimentConfig, store: ArtifactStore, outcome: ExperimentOutcome) -> None:
        options = config.options
        params, grid = config.params, config.grid
        log = await asyncio.to_thread(self.radial_run, config, NonlinearitySpec(params.p))
        history = log.snapshots

        decay = diagnostics.decay_profile(history, params)
        store.write_csv("decay.csv", ("t", "Q"), decay.to_rows())
        store.write_csv("decay_bracket.csv", ("t", "norm"), list(zip(decay.times, decay.bracket_sup)))
        outcome.check("decay_bounded", decay.bounded, decay.C_emp, None)
        outcome.check("bracket_sup_bounded", decay.bracket_bounded, float(decay.bracket_sup.max()), None)

        k = int(options.get("sobolev_k", 2))
        sobolev = diagnostics.sobolev_history(history, params, k)
        store.write_csv("sobolev.csv", ("t", "norm"), sobolev.to_rows())
        outcome.check("sobolev_bounded", bool(sobolev.bounded), float(sobolev.values.max()), None)

        l2 = diagnostics.l2_history(history, params)
        store.write_csv("l2.csv", ("t", "norm"), l2.to_rows())
        if l2.meta["applies"]:
            outcome.check("l2_bounded", bool(l2.bounded), float(l2.values.max()), None)

        integrability = diagnostics.potential_integrability(history, params, options.get("split"))
        outcome.check("potential_integrable", integrability.passed, integrability.tail, integrability.head)

        q, r_exp = sobolev_strichartz_pair(0.5, params.n)
        raw_pairs = options.get("pairs", [[None, 2.0], [q, r_exp]])
        pairs = [(math.inf if a is None else float(a), math.inf if b is None else float(b)) for a, b in raw_pairs]
        monitor = diagnostics.strichartz_monitor(history, params, pairs)

        u0, u1 = history[0].u, history[0].v
        norms = diagnostics.data_norm(u0, u1, grid, params, float(options.get("M", 2.0)))
        payload = {
            "decay": decay.to_dict(),
            "sobolev_k": k,
            "l2": {"bounded": l2.bounded, **l2.meta},
            "potential": integrability.to_dict(),
            "potential_decay_constant": diagnostics.potential_decay_constant(history, params),
            "strichartz": [entry.to_dict() for entry in monitor],
            "data_norm": norms.to_dict(),
        }
        store.write_json("diagnose.json", payload)
        outcome.metrics.update({"C_emp": decay.C_emp, "data_norm": norms.full_norm})

    async def _hardy_test(self, config: ExperimentConfig, store: ArtifactStore, outcome: ExperimentOutcome) -> None:
        options = config.options
        n, seed = config.params.n, config.seed
        survey = await asyncio.to_thread(diagnostics.hardy_monte_carlo, int(options.get("trials", 10000)), n, seed)
        store.write_csv("hardy_ratios.csv", ("trial", "ratio"), list(enumerate(survey.ratios)))
        outcome.check("hardy_constant_finite", math.isfinite(survey.C_H) and survey.C_H > 0, survey.C_H, None)

        constants = await asyncio.to_thread(
            diagnostics.hardy_scaling_study,
            options.get("scales", [0.5, 1.0, 2.0]),
            int(options.get("scaling_trials", 1000)),
            n,
            seed,
        )
        spread = diagnostics.scaling_spread(constants)
        limit = float(options.get("spread_tolerance", 0.1))
        outcome.check("hardy_dilation_stable", spread <= limit, spread, limit)

        rng = np.random.default_rng(seed)
        trials = int(options.get("kernel_trials", 10000))
        kernel = {}
        for p in options.get("kernel_powers", [7, 8]):
            u = rng.uniform(-2.0, 2.0, trials)
            w = rng.uniform(-2.0, 2.0, trials)
            error = float(np.max(perturbation.kernel_identity_error(u, w, Params(n, float(p)))))
            kernel[str(p)] = error
            tolerance = float(options.get("kernel_tolerance", 1e-8))
            outcome.check(f"kernel_identity_p{p}", error <= tolerance, error, tolerance)
        store.write_json("hardy.json", {"survey": survey.to_dict(), "scaling": constants, "spread": spread, "kernel_errors": kernel})

    async def _sweep(self, config: ExperimentConfig, store: ArtifactStore, outcome: ExperimentOutcome) -> None:
        options = config.options
        params, grid = config.params, config.grid
        log = await asyncio.to_thread(self.radial_run, config, NonlinearitySpec(params.p))
        bg = perturbation.Background.from_log(log, params)
        spec = options.get("perturbation", DEFAULT_PERTURBATION)
        shape = perturbation.PerturbationShape(build_data(spec, grid), np.zeros(grid.num_points), int(options.get("ell", 0)))
        settings = perturbation.SweepSettings(
            t_end=config.time.t_end,
            dt=config.time.resolve_dt(grid.h),
            stride=config.time.stride,
            num_theta=int(options.get("num_theta", 16)),
            delta=float(options.get("delta", 0.5)),
            checkpoints=int(options.get("checkpoints", 10)),
            modes=tuple(options.get("modes", ["linearized", "axisym"])),
        )
        epsilons = [float(e) for e in options.get("epsilons", [1e-3, 1e-2, 1e-1])]
        records = await perturbation.stability_sweep_async(epsilons, shape, bg, params, settings)

        header = ("epsilon", "t", "M", "E_w", "bound")
        gronwall = []
        for mode in settings.modes:
            members = [r for r in records if r.mode == mode]
            if not members:
                continue
            store.write_csv(f"sweep_{mode}.csv", header, [row for r in members for row in r.to_rows()])
            for record in members:
                label = f"{mode}_eps{record.epsilon:g}"
                outcome.check(f"{label}_bounded", record.verdict == "bounded", record.growth_factor, perturbation.GROWTH_LIMIT)
                if record.gronwall is not None:
                    report = record.gronwall
                    gronwall.append({"epsilon": record.epsilon, "mode": mode, **report.to_dict()})
                    outcome.check(f"{label}_gronwall", report.satisfied, float(np.max(report.E_w)), None)
                    if mode == "axisym":
                        outcome.check(f"{label}_decomposition", report.decomposition_residual <= 1e-10, report.decomposition_residual, 1e-10)
            nonzero = [r for r in members if r.epsilon > 0 and r.error is None]
            if len(nonzero) >= 2:
                spread = perturbation.linear_response_spread(members, mode)
                limit = float(options.get("linear_response_tolerance", 0.2))
                outcome.metrics[f"{mode}_linear_response_spread"] = spread
                outcome.check(f"{mode}_linear_response", spread <= limit, spread, limit)
        store.write_json("gronwall.json", gronwall)
        store.write_json("sweep.json", [
            {"epsilon": r.epsilon, "mode": r.mode, "verdict": r.verdict, "growth_factor": r.growth_factor, "final_M": r.final_M, "error": r.error}
            for r in records
        ])
        outcome.metrics["cache"] = self.cache.get_stats()
