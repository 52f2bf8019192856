import argparse
import json
import sys
from typing import Dict, List, Optional

import numpy as np
from loguru import logger

import config
from calculus import AxiomSystem, consistent, derives
from config import Config
from errors import CalculusException, InputError, PreconditionViolation
from fragments import find_fragment, is_fragment, witness_model
from generate import KINDS, random_model
from identify import (
    identified_graph,
    load_options,
    pruning_constraints,
    rank_options,
    recursiveness_test,
)
from language import (
    Atom,
    Signature,
    parse_formula,
    parse_formula_set,
    read_formula_lines,
    scan_variables,
)
from scm import Digraph, classify, dump_model, potential_response, read_model, semantic_graph
from semantics import satisfies, theory_literals

VERBOSITY = {0: "WARNING", 1: "INFO", 2: "DEBUG"}


def configure_logger(verbosity: int = 0):
    logger.remove()  # Remove the default logger
    logger.add(
        sys.stderr,
        level=VERBOSITY[min(verbosity, 2)],
        format="<green>{elapsed}</green> | <level>{level: <8}</level> | <level> {message} </level>",
    )


def emit(cfg: Config, text: str, document: dict):
    if cfg.json:
        print(json.dumps(document, sort_keys=True))
    else:
        sys.stdout.write(text if text.endswith("\n") or not text else text + "\n")


def parse_arguments(argv: Optional[List[str]] = None):
    env = Config.from_env()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", choices=[s.value for s in AxiomSystem], help="Axiom system")
    common.add_argument("--jobs", type=int, default=env.jobs, help="Parallel workers for sweeps")
    common.add_argument("--json", action="store_true", help="Emit one JSON document")
    common.add_argument(
        "--max-extensions",
        type=int,
        default=env.max_extensions,
        help="Abort when more extensions than this would be enumerated",
    )
    common.add_argument(
        "--max-variables",
        type=int,
        default=env.max_variables,
        help=f"Signature size cap (default: {config.DEFAULT_MAX_VARIABLES})",
    )
    common.add_argument("--variables", help="Comma separated signature for formula inputs")
    common.add_argument("-v", "--verbose", action="count", default=0, help="Log more to stderr")

    parser = argparse.ArgumentParser(
        prog="relcalc",
        description="Decide and explain causal relevance statements over functional causal models",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"relcalc {config.VERSION} (format {config.FORMAT_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help: str, system: str = "uniq"):
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(default_system=system)
        return p

    p = command("eval", "Check whether a model satisfies a formula")
    p.add_argument("--model", required=True)
    p.add_argument("--formula", required=True)

    p = command("theory", "Print the verdict of a model on every atom")
    p.add_argument("--model", required=True)
    p.add_argument("--literals", action="store_true", help="Print the literal theory as formulas")

    p = command("respond", "Potential response of target variables under an intervention")
    p.add_argument("--model", required=True)
    p.add_argument("--set", action="append", default=[], help="Intervention NAME=VALUE")
    p.add_argument("--target", action="append", required=True, help="Target variable(s)")
    p.add_argument("--context", help="Context (default: the first one)")

    p = command("classify", "Place a model in the class hierarchy")
    p.add_argument("--model", required=True)

    p = command("consistent", "Decide consistency of a formula set")
    p.add_argument("--gamma", required=True)
    p.add_argument("--emit-extension", action="store_true")

    p = command("derive", "Decide whether a formula follows from a formula set")
    p.add_argument("--gamma", required=True)
    p.add_argument("--formula", required=True)

    p = command("graph", "Semantic graph of a model, or syntactic graph of an extension")
    p.add_argument("--model")
    p.add_argument("--gamma")
    p.add_argument("--context")
    p.add_argument("--dot", action="store_true")

    p = command("witness", "Build a model satisfying a consistent formula set", "srec")
    p.add_argument("--gamma", required=True)

    p = command("fragment", "Find or check a fragment in an extension of a formula set", "srec")
    p.add_argument("--gamma", required=True)
    p.add_argument("--anchor", required=True, help="'X; Y; Z1,Z2' with single X and Y")
    p.add_argument("--edges", help="Check this edge list 'A->B,C->D' instead of searching")

    p = command("identify", "Edges guaranteed by a formula set", "srec")
    p.add_argument("--gamma", required=True)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--dot", action="store_true")

    p = command("rank", "Rank information options by pondered cost", "srec")
    p.add_argument("--gamma", required=True)
    p.add_argument("--options", required=True)

    p = command("rectest", "Necessary test for recursiveness")
    p.add_argument("--gamma", required=True)

    p = command("prune", "Export path constraints for the negative literals", "srec")
    p.add_argument("--gamma", required=True)

    p = command("gen", "Generate a seeded random model")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-n", "--size", type=int, default=3)
    p.add_argument("--kind", choices=KINDS, default="srec")
    p.add_argument("--contexts", type=int, default=1)
    p.add_argument("--domain-size", type=int, default=2)

    args = parser.parse_args(argv)
    cfg = Config(
        max_variables=args.max_variables,
        max_extensions=args.max_extensions,
        jobs=max(1, args.jobs),
        system=args.system or args.default_system,
        json=args.json,
        verbosity=args.verbose,
    )
    return args, cfg


def load_model_checked(path: str, cfg: Config):
    m = read_model(path)
    m.sig.check_size(cfg.max_variables)
    return m


def signature_for(args, cfg: Config, texts: List[str]) -> Signature:
    if getattr(args, "model", None):
        return load_model_checked(args.model, cfg).sig
    if args.variables:
        sig = Signature.of([v.strip() for v in args.variables.split(",") if v.strip()])
    else:
        names = scan_variables(texts)
        if not names:
            raise PreconditionViolation("no variables given and none found in the formulas")
        sig = Signature.of(names)
    sig.check_size(cfg.max_variables)
    return sig


def read_gamma(args, cfg: Config, extra: List[str] = ()):
    lines = read_formula_lines(args.gamma)
    sig = signature_for(args, cfg, lines + list(extra))
    return parse_formula_set("\n".join(lines), sig), sig


def parse_assignment(items: List[str]) -> Dict[str, str]:
    assignment = {}
    for item in items:
        if "=" not in item:
            raise InputError(f"expected NAME=VALUE, got {item!r}")
        name, value = item.split("=", 1)
        assignment[name.strip()] = value.strip()
    return assignment


def parse_anchor(text: str, sig: Signature):
    parts = [p.strip() for p in text.split(";")]
    if len(parts) != 3:
        raise InputError(f"anchor must look like 'X; Y; Z', got {text!r}")
    x, y, z = ([n.strip() for n in p.split(",") if n.strip()] for p in parts)
    if len(x) != 1 or len(y) != 1:
        raise InputError("fragment anchors need a single first and second variable")
    atom = Atom.of(sig, x, y, z)
    return x[0], y[0], atom.z


def parse_edges(text: str, sig: Signature) -> Digraph:
    edges = []
    for item in text.split(","):
        if not item.strip():
            continue
        if "->" not in item:
            raise InputError(f"expected edge A->B, got {item!r}")
        a, b = (v.strip() for v in item.split("->", 1))
        sig.position(a)
        sig.position(b)
        edges.append((a, b))
    return Digraph.of(sig, edges)


def graph_output(cfg: Config, g: Digraph, dot: bool) -> int:
    emit(cfg, g.render_dot() if dot else g.render(), {"edges": [list(e) for e in g.sorted_edges()]})
    return 0


def run_command(args, cfg: Config) -> int:
    system = AxiomSystem(cfg.system)

    if args.command == "eval":
        m = load_model_checked(args.model, cfg)
        verdict = satisfies(m, parse_formula(args.formula, m.sig))
        emit(cfg, "true" if verdict else "false", {"result": verdict})
        return 0 if verdict else 1

    if args.command == "theory":
        m = load_model_checked(args.model, cfg)
        theory = theory_literals(m, cfg.jobs)
        if args.literals:
            text = "".join(lit.render() + "\n" for lit in theory.literals())
        else:
            text = theory.render()
        atoms = [{"atom": lit.atom.render(), "holds": lit.positive} for lit in theory.literals()]
        document = {"atoms": atoms}
        emit(cfg, text, document)
        return 0

    if args.command == "respond":
        m = load_model_checked(args.model, cfg)
        targets = [t.strip() for item in args.target for t in item.split(",") if t.strip()]
        u = args.context or m.contexts[0]
        response = potential_response(m, parse_assignment(args.set), targets, u)
        text = "".join(f"{k}={v}\n" for k, v in response.items())
        emit(cfg, text, {"context": u, "response": response})
        return 0

    if args.command == "classify":
        m = load_model_checked(args.model, cfg)
        label = classify(m, cfg.jobs).value
        emit(cfg, label, {"class": label})
        return 0

    if args.command == "consistent":
        gamma, sig = read_gamma(args, cfg)
        result = consistent(gamma, system, sig)
        text = "consistent" if result.consistent else "inconsistent"
        document = {"consistent": result.consistent}
        if result.consistent and args.emit_extension:
            text += "\n" + result.witness.render()
            document["extension"] = [lit.render() for lit in result.witness.literals()]
        emit(cfg, text, document)
        return 0 if result.consistent else 1

    if args.command == "derive":
        gamma, sig = read_gamma(args, cfg, [args.formula])
        verdict = derives(gamma, parse_formula(args.formula, sig), system, sig)
        emit(cfg, "derivable" if verdict else "not derivable", {"derivable": verdict})
        return 0 if verdict else 1

    if args.command == "graph":
        if bool(args.model) == bool(args.gamma):
            raise InputError("graph needs exactly one of --model or --gamma")
        if args.model:
            m = load_model_checked(args.model, cfg)
            return graph_output(cfg, semantic_graph(m, args.context), args.dot)
        gamma, sig = read_gamma(args, cfg)
        result = consistent(gamma, system, sig)
        if not result.consistent:
            emit(cfg, "inconsistent", {"consistent": False})
            return 1
        return graph_output(cfg, result.witness.graph, args.dot)

    if args.command == "witness":
        gamma, sig = read_gamma(args, cfg)
        document = dump_model(witness_model(gamma, system, sig, cfg.max_extensions))
        emit(cfg, json.dumps(document, indent=2), document)
        return 0

    if args.command == "fragment":
        gamma, sig = read_gamma(args, cfg)
        x, y, z = parse_anchor(args.anchor, sig)
        result = consistent(gamma, system, sig)
        if not result.consistent:
            emit(cfg, "inconsistent", {"consistent": False})
            return 1
        if args.edges is not None:
            verdict = is_fragment(parse_edges(args.edges, sig), result.witness, x, y, z)
            emit(cfg, "fragment" if verdict else "not a fragment", {"fragment": verdict})
            return 0 if verdict else 1
        fragment = find_fragment(result.witness, x, y, z)
        if fragment is None:
            emit(cfg, "no fragment", {"fragment": None})
            return 1
        emit(
            cfg,
            fragment.render(),
            {
                "anchor": [x, y, list(z.names)],
                "edges": [list(e) for e in fragment.graph.sorted_edges()],
            },
        )
        return 0

    if args.command == "identify":
        gamma, sig = read_gamma(args, cfg)
        g = identified_graph(gamma, system, sig, args.exhaustive, cfg.max_extensions)
        return graph_output(cfg, g, args.dot)

    if args.command == "rank":
        with open(args.options, encoding="utf-8") as f:
            document = json.load(f)
        option_texts = [
            t for entry in document if isinstance(entry, dict) for t in entry.get("formulas", [])
        ]
        gamma, sig = read_gamma(args, cfg, option_texts)
        ranked = rank_options(gamma, load_options(document, sig), system, sig)
        text = "".join(
            f"option {r.index}: {r.cost.render()} ({r.new_edges} new edges)\n" for r in ranked
        )
        rows = [
            {"option": r.index, "cost": r.cost.render(), "new_edges": r.new_edges} for r in ranked
        ]
        emit(cfg, text, {"ranking": rows})
        return 0

    if args.command == "rectest":
        gamma, sig = read_gamma(args, cfg)
        verdict = recursiveness_test(gamma, sig)
        emit(cfg, verdict.value, {"result": verdict.value})
        return 0 if verdict.value == "PossiblyRecursive" else 1

    if args.command == "prune":
        gamma, sig = read_gamma(args, cfg)
        constraints = pruning_constraints(gamma)
        emit(cfg, json.dumps(constraints, indent=2), {"constraints": constraints})
        return 0

    if args.command == "gen":
        rng = np.random.default_rng(args.seed)
        m = random_model(rng, args.size, args.kind, args.contexts, args.domain_size)
        document = dump_model(m)
        emit(cfg, json.dumps(document, indent=2), document)
        return 0

    raise InputError(f"unknown command {args.command}")


def run(argv: Optional[List[str]] = None) -> int:
    try:
        args, cfg = parse_arguments(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 0
    except CalculusException as e:
        configure_logger()
        logger.error(e)
        return e.exit_code
    configure_logger(cfg.verbosity)
    try:
        return run_command(args, cfg)
    except CalculusException as e:
        logger.error(e)
        return e.exit_code
    except (OSError, json.JSONDecodeError) as e:
        logger.error(e)
        return 2


if __name__ == "__main__":
    sys.exit(run())
