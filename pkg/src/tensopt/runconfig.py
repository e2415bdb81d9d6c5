"""Run configuration files: one INI describing a whole optimization run.

Sections:

``[accelerator]``
    dim, elem_type, acc_type, spad_kb, acc_kb, plus optional timing
    overrides named exactly like the timing parameters (cpu_node_cost,
    issue_cost, config_cost, dma_startup, bus_bytes_per_cycle,
    compute_fill, queue_depth, fence_drain_overhead).

``[workload]``
    kind = gemm | conv | tinympc_fwd with its dimension keys
    (gemm: m,k,n; conv: batch,in_ch,out_ch,spatial,kernel,stride;
    tinympc_fwd: nhorizon), optional start_kernel = path to a .gk file
    (default: the built-in naive kernel for the workload), and optional
    trials_functional / trials_timed counts used when verifying candidates.

``[search]``
    beam_width, plans_per_element, codes_per_plan, iterations,
    dropout_prob, seed, menu = gemm | finegrained, and ablation switches
    include_isa, include_menu, include_feedback, enable_dropout,
    enable_ensemble (all default true).

``[backends]``
    Exactly one mode: ``script = path`` to a JSON script manifest, or
    ``models = name1, name2`` naming ``[model.<name>]`` sections that each
    carry endpoint, model, and optional temperature, max_tokens, timeout,
    max_retries, backoff, api_key_env.  API keys come from the environment
    only.

``[output]``
    dir = directory for trace/schedule/report/best-kernel files.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path

from .llm import ModelSpec
from .search import Ablations, SearchConfig, load_menu
from .search.prompts import load_prompt_asset
from .sim import AcceleratorConfig, TimingParams
from .verify import WorkloadSpec, conv_spec, gemm_spec, tinympc_spec
from .verify.workloads import start_kernel as default_start_kernel

_TIMING_KEYS = tuple(f.name for f in fields(TimingParams))

_MENU_FOR_KIND = {"gemm": "gemm", "conv": "gemm", "tinympc_fwd": "finegrained"}


@dataclass
class RunConfig:
    """Everything a search run needs, resolved and validated."""

    accelerator: AcceleratorConfig
    workload: WorkloadSpec
    start_code: str
    search: SearchConfig
    backend_mode: str  # "scripted" | "live"
    script_path: Path | None
    models: tuple[ModelSpec, ...]
    output_dir: Path
    trials_functional: int = 5
    trials_timed: int = 20


def _accelerator(sec: configparser.SectionProxy) -> AcceleratorConfig:
    overrides = {k: sec.getint(k) for k in _TIMING_KEYS if k in sec}
    return AcceleratorConfig(
        dim=sec.getint("dim"),
        elem_type=sec.get("elem_type", "int8"),
        acc_type=sec.get("acc_type", "int32"),
        spad_kb=sec.getint("spad_kb", 256),
        acc_kb=sec.getint("acc_kb", 64),
        timing=TimingParams(**overrides),
    )


def load_accelerator_config(path: str | Path) -> AcceleratorConfig:
    """Read just the [accelerator] section of a config file."""
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")
    if "accelerator" not in parser:
        raise ValueError(f"{path}: missing [accelerator] section")
    return _accelerator(parser["accelerator"])


def _workload(sec: configparser.SectionProxy,
              cfg: AcceleratorConfig) -> WorkloadSpec:
    kind = sec.get("kind", "gemm")
    elem = sec.get("elem_type", cfg.elem_type)
    acc = sec.get("acc_type", cfg.acc_type)
    if kind == "gemm":
        return gemm_spec(sec.getint("m"), sec.getint("k"), sec.getint("n"),
                         elem_type=elem, acc_type=acc)
    if kind == "conv":
        return conv_spec(sec.getint("batch"), sec.getint("in_ch"),
                         sec.getint("out_ch"), sec.getint("spatial"),
                         sec.getint("kernel"), sec.getint("stride", 1),
                         elem_type=elem, acc_type=acc)
    if kind == "tinympc_fwd":
        return tinympc_spec(sec.getint("nhorizon", 5))
    raise ValueError(f"unknown workload kind {kind!r}")


def _search(parser: configparser.ConfigParser, kind: str,
            cfg: AcceleratorConfig,
            models: tuple[ModelSpec, ...]) -> SearchConfig:
    if "search" not in parser:
        parser.add_section("search")
    sec = parser["search"]
    ablations = Ablations(
        include_isa=sec.getboolean("include_isa", True),
        include_menu=sec.getboolean("include_menu", True),
        include_feedback=sec.getboolean("include_feedback", True),
        enable_dropout=sec.getboolean("enable_dropout", True),
        enable_ensemble=sec.getboolean("enable_ensemble", True),
    )
    return SearchConfig(
        menu=load_menu(sec.get("menu", _MENU_FOR_KIND[kind])),
        beam_width=sec.getint("beam_width", 6),
        plans_per_element=sec.getint("plans_per_element", 6),
        codes_per_plan=sec.getint("codes_per_plan", 2),
        iterations=sec.getint("iterations", 15),
        dropout_prob=sec.getfloat("dropout_prob", 0.7),
        rules=load_prompt_asset("rules.txt"),
        isa_text=load_prompt_asset("isa.txt"),
        icl_tiling=load_prompt_asset("icl_tiling.txt"),
        accel_summary=cfg.summary(),
        models=models,
        ablations=ablations,
        seed=sec.getint("seed", 0),
    )


def _models(parser: configparser.ConfigParser,
            names: list[str]) -> tuple[ModelSpec, ...]:
    specs = []
    for name in names:
        sec_name = f"model.{name}"
        if sec_name not in parser:
            raise ValueError(f"backends lists {name!r} but there is no "
                             f"[{sec_name}] section")
        sec = parser[sec_name]
        if "endpoint" not in sec:
            raise ValueError(f"[{sec_name}] is missing 'endpoint'")
        kwargs = {"endpoint": sec["endpoint"],
                  "model": sec.get("model", name)}
        if "temperature" in sec:
            kwargs["temperature"] = sec.getfloat("temperature")
        if "max_tokens" in sec:
            kwargs["max_tokens"] = sec.getint("max_tokens")
        if "timeout" in sec:
            kwargs["timeout"] = sec.getfloat("timeout")
        if "max_retries" in sec:
            kwargs["max_retries"] = sec.getint("max_retries")
        if "backoff" in sec:
            kwargs["backoff"] = sec.getfloat("backoff")
        if "api_key_env" in sec:
            kwargs["api_key_env"] = sec["api_key_env"]
        specs.append(ModelSpec(**kwargs))
    return tuple(specs)


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    if not parser.read(path):
        raise FileNotFoundError(f"config file not found: {path}")
    for required in ("accelerator", "workload"):
        if required not in parser:
            raise ValueError(f"{path}: missing [{required}] section")

    cfg = _accelerator(parser["accelerator"])
    wsec = parser["workload"]
    spec = _workload(wsec, cfg)

    if "start_kernel" in wsec:
        kpath = Path(wsec["start_kernel"])
        if not kpath.is_absolute():
            kpath = path.parent / kpath
        if not kpath.is_file():
            raise ValueError(f"start kernel not found: {kpath}")
        start_code = kpath.read_text()
    else:
        start_code = default_start_kernel(spec, cfg.dim)

    script_path: Path | None = None
    models: tuple[ModelSpec, ...] = ()
    mode = ""
    if "backends" in parser:
        bsec = parser["backends"]
        has_script = "script" in bsec
        has_models = "models" in bsec
        if has_script == has_models:
            raise ValueError(f"{path}: [backends] must set exactly one of "
                             "'script' or 'models'")
        if has_script:
            mode = "scripted"
            script_path = Path(bsec["script"])
            if not script_path.is_absolute():
                script_path = path.parent / script_path
            if not script_path.is_file():
                raise ValueError(f"script manifest not found: {script_path}")
        else:
            mode = "live"
            names = [n.strip() for n in bsec["models"].replace("\n", ",")
                     .split(",") if n.strip()]
            if not names:
                raise ValueError(f"{path}: [backends] models list is empty")
            models = _models(parser, names)

    sc = _search(parser, spec.kind, cfg, models)

    out_dir = Path(parser["output"]["dir"]) if "output" in parser and \
        "dir" in parser["output"] else Path("tensopt-out")
    if not out_dir.is_absolute():
        out_dir = path.parent / out_dir

    return RunConfig(
        accelerator=cfg, workload=spec, start_code=start_code, search=sc,
        backend_mode=mode, script_path=script_path, models=models,
        output_dir=out_dir,
        trials_functional=wsec.getint("trials_functional", 5),
        trials_timed=wsec.getint("trials_timed", 20),
    )
