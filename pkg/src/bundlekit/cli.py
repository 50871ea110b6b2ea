"""Command-line front end.

Exit codes: 0 affirmative, 1 negative (a witness is printed), 2 usage or
input error, 3 a size cap was hit.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Callable, Iterable, List, Optional

from . import bisim, harness, kripke, neighborhood, representation, schemas
from .errors import BundleError, CapExceeded, GenerationError, PreconditionError
from .harness import jsonable
from .kripke import KripkeModel, ModelClass
from .neighborhood import ConvexNbhModel
from .terms import classify_convex_syntactic, parse_formula, parse_term, render

FORMAT = 1


class UsageError(Exception):
    pass


class Output:
    """Collects the human lines and the JSON record of one command."""

    def __init__(self, args, command: str):
        self.args = args
        self.record = {"format": FORMAT, "command": command}
        self.lines: List[str] = []

    def say(self, line: str):
        self.lines.append(line)

    def set(self, **kw):
        self.record.update({k: jsonable(v) for k, v in kw.items()})

    def flush(self, stream):
        if getattr(self.args, "json", False):
            stream.write(json.dumps(self.record, sort_keys=True) + "\n")
        else:
            for line in self.lines:
                stream.write(line + "\n")


# ---------------------------------------------------------------------------
# input helpers

def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}")
    except json.JSONDecodeError as e:
        raise UsageError(f"{path} is not valid JSON: {e}")


def _write_json(path: str, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=False)
        fh.write("\n")


def _is_nbh_data(data) -> bool:
    return isinstance(data, dict) and ("nplus" in data or "nminus" in data)


def load_kripke(path: str) -> KripkeModel:
    data = _read_json(path)
    if _is_nbh_data(data):
        raise UsageError(f"{path} holds a neighborhood model, a Kripke model is expected")
    return KripkeModel.from_json(data)


def load_nbh(path: str) -> ConvexNbhModel:
    data = _read_json(path)
    if not _is_nbh_data(data) and "relations" in data:
        raise UsageError(f"{path} holds a Kripke model, a neighborhood model is expected")
    return ConvexNbhModel.from_json(data)


def _world(model, ref: str) -> int:
    try:
        return model.index(ref)
    except BundleError:
        raise
    except (KeyError, ValueError, IndexError):
        raise UsageError(f"unknown world {ref!r}")


def _names(model, ws: Iterable[int]) -> List[str]:
    return [model.name(w) for w in sorted(ws)]


def _show_set(model, ws) -> str:
    return "{" + ", ".join(_names(model, ws)) + "}"


def _term_for(model: KripkeModel, text: str):
    t = parse_term(text, model.agents)
    model.check_term(t)
    return t


def _named(model, x):
    """Rename worlds inside set-shaped parts of a witness."""
    if isinstance(x, frozenset):
        return _names(model, x)
    if isinstance(x, kripke.NbhPair):
        return [_names(model, x.pos), _names(model, x.neg)]
    if isinstance(x, tuple):
        return [_named(model, y) for y in x]
    if isinstance(x, dict):
        return {str(k): _named(model, v) for k, v in x.items()}
    return jsonable(x)


# ---------------------------------------------------------------------------
# commands; each returns an exit code

def cmd_eval(a, out):
    m = load_kripke(a.model)
    t = _term_for(m, a.term)
    f = parse_formula(a.formula)
    ext = kripke.evaluate(m, t, f)
    out.say(_show_set(m, ext))
    out.set(term=render(t), formula=render(f), worlds=_names(m, ext))
    return 0


def cmd_nbh(a, out):
    m = load_kripke(a.model)
    t = _term_for(m, a.term)
    w = _world(m, a.world)
    pairs = kripke.canonical(kripke.nbh(m, w, t))
    for p in pairs:
        out.say(f"({_show_set(m, p.pos)}, {_show_set(m, p.neg)})")
    out.say(f"{len(pairs)} pairs")
    out.set(world=m.name(w), term=render(t), pairs=[[_names(m, p.pos), _names(m, p.neg)] for p in pairs])
    return 0


def cmd_dom(a, out):
    m = load_kripke(a.model)
    t = _term_for(m, a.term)
    w = _world(m, a.world)
    d = kripke.dom(m, w, t)
    out.say(_show_set(m, d))
    out.set(world=m.name(w), term=render(t), domain=_names(m, d))
    return 0


def cmd_completion(a, out):
    m = load_kripke(a.model)
    t = _term_for(m, a.term)
    w = _world(m, a.world)
    com = sorted(kripke.completion(m, w, t), key=kripke.set_key)
    for z in com:
        out.say(_show_set(m, z))
    out.say(f"{len(com)} sets")
    out.set(world=m.name(w), term=render(t), sets=[_names(m, z) for z in com])
    return 0


def _bisim_model(a):
    if a.model:
        return load_kripke(a.model)
    if a.left and a.right:
        u, _ = kripke.disjoint_union(load_kripke(a.left), load_kripke(a.right))
        return u
    raise UsageError("give --model, or --left and --right for their disjoint union")


def _relation_check(a, out, check):
    m = _bisim_model(a)
    data = _read_json(a.relation)
    term_text = a.term or (data.get("term") if isinstance(data, dict) else None)
    if not term_text:
        raise UsageError("no term given (use --term or a 'term' entry in the relation file)")
    t = _term_for(m, term_text)
    try:
        z = bisim.load_relation(data, m)
    except (KeyError, ValueError, TypeError) as e:
        raise UsageError(f"bad relation file: {e}")
    v = check(m, z, t)
    out.set(term=render(t), pairs=len(z), holds=v.ok)
    if v.ok:
        out.say(f"yes: the {len(z)} pairs form the relation")
        return 0
    out.say("no: " + v.witness.describe(m))
    out.set(witness={"kind": v.witness.kind, "at": _names_pair(m, v.witness.at),
                     "detail": _named(m, v.witness.witness), "text": v.witness.describe(m)})
    return 1


def _names_pair(m, pair):
    return [m.name(pair[0]), m.name(pair[1])]


def cmd_bisim(a, out):
    return _relation_check(a, out, bisim.is_bisimulation)


def cmd_convex_bisim(a, out):
    return _relation_check(a, out, bisim.is_convex_bisimulation)


def cmd_bisimilar(a, out):
    left, right = load_kripke(a.left), load_kripke(a.right)
    u, off = kripke.disjoint_union(left, right)
    t = _term_for(u, a.term)
    w, v = _world(left, a.lw), _world(right, a.rw)
    largest = bisim.largest_convex_bisimulation if a.convex else bisim.largest_bisimulation
    z = largest(u, t)
    ok = (w, v + off) in z
    out.set(term=render(t), left=left.name(w), right=right.name(v), bisimilar=ok, convex=a.convex)
    if a.cert:
        _write_json(a.cert, {"format": FORMAT, "relation": sorted(_names_pair(u, p) for p in z)})
    out.say(("yes" if ok else "no") + f": {left.name(w)} and {right.name(v)}"
            + (" are" if ok else " are not") + (" convex" if a.convex else "") + " bisimilar")
    if not ok:
        dist = [blk for blk in bisim.equiv_partition(u, t) if w in blk and v + off not in blk]
        if dist:
            out.set(witness={"block": _names(u, dist[0])})
            out.say(f"  {left.name(w)}'s equivalence class: {_show_set(u, dist[0])}")
    return 0 if ok else 1


def cmd_is_convex(a, out):
    m = load_kripke(a.model)
    t = _term_for(m, a.term)
    v = kripke.is_convex(m, t)
    out.set(term=render(t), convex=v.ok)
    if v.ok:
        out.say(f"yes: {render(t)} is convex over the model")
        return 0
    w, p1, p2 = v.witness
    out.set(witness={"world": m.name(w), "pair1": _named(m, p1), "pair2": _named(m, p2)})
    out.say(f"no: at {m.name(w)}, ({_show_set(m, p1.pos)}, {_show_set(m, p1.neg)}) and "
            f"({_show_set(m, p2.pos)}, {_show_set(m, p2.neg)}) do not recombine")
    return 1


def cmd_classify(a, out):
    t = parse_term(a.term)
    cls = classify_convex_syntactic(t)
    out.say(str(cls))
    out.set(term=render(t), classification=str(cls))
    return 1 if cls.value == "Unknown" else 0


def cmd_nsat(a, out):
    nm = load_nbh(a.model)
    w = _world(nm, a.world)
    f = parse_formula(a.formula)
    ok = neighborhood.nsat(nm, w, f)
    out.say(("true" if ok else "false") + f" at {nm.name(w)}")
    out.set(world=nm.name(w), formula=render(f), holds=ok)
    return 0 if ok else 1


def _verdict(out, nm, v, yes: str, no: str, witness=None):
    out.set(holds=v.ok)
    if v.ok:
        out.say("yes: " + yes)
        return 0
    named = witness if witness is not None else _named(nm, v.witness)
    out.set(witness=named)
    out.say(f"no: {no}; witness {json.dumps(named)}")
    return 1


def cmd_core_check(a, out):
    nm = load_nbh(a.model)
    return _verdict(out, nm, neighborhood.is_core(nm), "core model", "not core")


def cmd_property_check(a, out):
    nm = load_nbh(a.frame)
    try:
        v = neighborhood.property_check(nm, a.property, a.n)
    except ValueError as e:
        raise UsageError(str(e))
    out.set(property=a.property, n=a.n)
    # property witnesses alternate world, set, world, set, ...
    named = None if v.ok else [nm.name(x) if i % 2 == 0 else _names(nm, x) for i, x in enumerate(v.witness)]
    return _verdict(out, nm, v, f"{a.property} holds", f"{a.property} fails", named)


def cmd_schema_valid(a, out):
    nm = load_nbh(a.frame)
    try:
        schema = schemas.get_schema(a.schema, a.n)
    except ValueError as e:
        raise UsageError(str(e))
    v = schemas.schema_valid_on_frame(nm, schema, max_worlds=a.max_worlds)
    out.set(schema=str(schema), formula=render(schema.formula), valid=v.ok)
    if v.ok:
        out.say(f"yes: {schema} is valid on the frame")
        return 0
    w, env = v.witness
    named = {k: _names(nm, s) for k, s in env.items()}
    out.set(witness={"world": nm.name(w), "assignment": named})
    out.say(f"no: {schema} fails at {nm.name(w)} under {json.dumps(named)}")
    return 1


def cmd_generate_submodel(a, out):
    nm = load_nbh(a.model)
    w = _world(nm, a.world)
    sub, emb = neighborhood.generated_submodel(nm, w)
    data = sub.to_json()
    out.set(root=nm.name(w), worlds=[nm.name(x) for x in emb], model=data)
    out.say(f"generated from {nm.name(w)}: {len(emb)} worlds {json.dumps([nm.name(x) for x in emb])}")
    if a.out:
        _write_json(a.out, data)
        out.say(f"written to {a.out}")
    return 0


def cmd_represent_check(a, out):
    nm = load_nbh(a.nbh)
    km = load_kripke(a.kripke)
    t = _term_for(km, a.term)
    v = representation.is_representation(nm, km, t)
    out.set(term=render(t), holds=v.ok)
    if v.ok:
        out.say(f"yes: the Kripke model represents the neighborhood model for {render(t)}")
        return 0
    out.set(witness=_named(nm, v.witness))
    out.say(f"no: {json.dumps(_named(nm, v.witness))}")
    return 1


def _emit_model(a, out, km: KripkeModel, cert):
    data = km.to_json()
    out.set(model=data, certificate=cert)
    if a.out:
        _write_json(a.out, data)
        out.say(f"model written to {a.out}")
    else:
        out.say(json.dumps(data))
    if a.cert:
        _write_json(a.cert, {"format": FORMAT, "certificate": cert})


def _build_group(a, out, mode):
    nm = load_nbh(a.model)
    agents = [x for x in a.agents.split(",") if x]
    km, col = representation.represent_group_knowledge(nm, agents, mode)
    t = representation.group_term(agents, mode)
    out.set(term=render(t))
    out.say(f"built {mode} model for {render(t)}")
    _emit_model(a, out, km, {"coloring": col.to_json(nm.name)})
    return 0


def cmd_build_s5(a, out):
    return _build_group(a, out, "S5")


def cmd_build_kd45(a, out):
    return _build_group(a, out, "KD45")


def cmd_build_s42(a, out):
    nm = load_nbh(a.model)
    w0 = _world(nm, a.w0)
    km, cert = representation.represent_belief_without_knowledge(nm, w0, want_s4f=a.s4f, agent=a.agent)
    named = {"X0": None if cert["X0"] is None else _names(nm, cert["X0"]),
             "R": [[nm.name(x), nm.name(y)] for x, y in cert["R"]], "trivial": cert["trivial"]}
    out.set(term=render(representation.belief_term(a.agent)))
    out.say("built S4.2 model" + (" (S4F)" if a.s4f else ""))
    _emit_model(a, out, km, named)
    return 0


def cmd_unravel(a, out):
    nm = load_nbh(a.model)
    w = _world(nm, a.world)
    un = representation.unravel(nm, w, a.depth, a.mode, a.n)
    data = un.model.to_json()
    frontier = [un.model.name(i) for i in sorted(un.frontier)]
    out.set(nodes=len(un.nodes), frontier=frontier, model=data)
    out.say(f"{len(un.nodes)} nodes, {len(frontier)} on the frontier")
    if a.out:
        _write_json(a.out, data)
        out.say(f"written to {a.out}")
    if a.cert:
        _write_json(a.cert, {"format": FORMAT, "frontier": frontier,
                             "source": {un.model.name(i): nm.name(nd.world) for i, nd in enumerate(un.nodes)}})
    return 0


def cmd_equiv_partition(a, out):
    data = _read_json(a.model)
    if _is_nbh_data(data):
        nm = ConvexNbhModel.from_json(data)
        blocks = neighborhood.equiv_partition(nm, a.depth)
        model = nm
    else:
        model = KripkeModel.from_json(data)
        if not a.term:
            raise UsageError("a Kripke model needs --term")
        blocks = bisim.equiv_partition(model, _term_for(model, a.term), depth=a.depth)
    for b in blocks:
        out.say(_show_set(model, b))
    out.set(blocks=[_names(model, b) for b in blocks])
    return 0


def _gen_params(a) -> harness.GenParams:
    return harness.GenParams(seed=a.seed, max_worlds=a.max_worlds, max_agents=a.max_agents, max_props=a.max_props,
                             term_depth=a.term_depth, formula_depth=a.formula_depth,
                             class_constraint=ModelClass.parse(a.model_class) if a.model_class else None,
                             property_constraints=tuple(a.property or ()), make_core=a.core,
                             catalog=a.catalog)


def cmd_gen(a, out):
    try:
        p = _gen_params(a)
    except ValueError as e:
        raise UsageError(str(e))
    if a.kind == "kripke":
        data = harness.gen_kripke(p).to_json()
    elif a.kind == "nbh":
        data = harness.gen_nbh_model(p).to_json()
    elif a.kind == "term":
        data = render(harness.gen_term(p))
    else:
        data = render(harness.gen_formula(p))
    out.set(kind=a.kind, seed=a.seed, value=data)
    if a.out:
        _write_json(a.out, data)
        out.say(f"written to {a.out}")
    else:
        out.say(data if isinstance(data, str) else json.dumps(data))
    return 0


def cmd_suite(a, out):
    log_fh = open(a.log, "w") if a.log else None

    def log(rec):
        if log_fh:
            log_fh.write(json.dumps(rec, sort_keys=True) + "\n")

    try:
        names = list(harness.SUITES) if a.suite == "all" else [a.suite]
        results = []
        for name in names:
            try:
                results.append(harness.run_suite(name, a.seed, a.cases, a.max_worlds, log))
            except ValueError as e:
                raise UsageError(str(e))
    finally:
        if log_fh:
            log_fh.close()
    for r in results:
        s = r.summary()
        out.say(f"{'PASS' if r.ok else 'FAIL'} {r.suite}: {r.cases} cases, {len(r.failures)} failures, "
                f"{s['seconds']} s")
        for f in r.failures[:5]:
            out.say("  " + json.dumps(f, sort_keys=True))
    out.set(results=[r.summary() for r in results], failures=[f for r in results for f in r.failures])
    return 0 if all(r.ok for r in results) else 1


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bundlekit", description="Bundled modalities on finite models.")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def cmd(name, fn: Callable, help_text: str):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--json", action="store_true", help="print one machine-readable JSON record")
        p.set_defaults(fn=fn)
        return p

    def model_term_world(p, world=True):
        p.add_argument("--model", required=True)
        p.add_argument("--term", required=True)
        if world:
            p.add_argument("--world", required=True)

    p = cmd("eval", cmd_eval, "worlds where a formula holds")
    model_term_world(p, world=False)
    p.add_argument("--formula", required=True)
    model_term_world(cmd("nbh", cmd_nbh, "generated neighborhood of a world"))
    model_term_world(cmd("dom", cmd_dom, "domain of a world"))
    model_term_world(cmd("completion", cmd_completion, "completion of the generated neighborhood"))
    for name, fn in (("bisim", cmd_bisim), ("convex-bisim", cmd_convex_bisim)):
        p = cmd(name, fn, f"check a relation file against the {name.replace('-', ' ')}ulation clauses")
        p.add_argument("--model")
        p.add_argument("--left")
        p.add_argument("--right")
        p.add_argument("--relation", required=True)
        p.add_argument("--term")
    p = cmd("bisimilar", cmd_bisimilar, "decide bisimilarity of two pointed models")
    for x in ("--left", "--right", "--lw", "--rw", "--term"):
        p.add_argument(x, required=True)
    p.add_argument("--convex", action="store_true", help="use the convex bisimulation clauses")
    p.add_argument("--cert", help="write the largest relation here")
    model_term_world(cmd("is-convex", cmd_is_convex, "check convexity of a term over a model"), world=False)
    p = cmd("classify", cmd_classify, "syntactic convexity class of a term")
    p.add_argument("--term", required=True)
    p = cmd("nsat", cmd_nsat, "truth in a neighborhood model")
    p.add_argument("--model", required=True)
    p.add_argument("--world", required=True)
    p.add_argument("--formula", required=True)
    p = cmd("core-check", cmd_core_check, "check the core conditions")
    p.add_argument("--model", required=True)
    p = cmd("property-check", cmd_property_check, "check a frame property")
    p.add_argument("--frame", required=True)
    p.add_argument("--property", required=True)
    p.add_argument("--n", type=int)
    p = cmd("schema-valid", cmd_schema_valid, "validity of an axiom schema on a frame")
    p.add_argument("--frame", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--max-worlds", type=int, default=6)
    p = cmd("generate-submodel", cmd_generate_submodel, "submodel generated from a world")
    p.add_argument("--model", required=True)
    p.add_argument("--world", required=True)
    p.add_argument("--out")
    p = cmd("represent-check", cmd_represent_check, "check that a Kripke model represents a neighborhood model")
    p.add_argument("--nbh", required=True)
    p.add_argument("--kripke", required=True)
    p.add_argument("--term", required=True)
    for name, fn in (("build-s5", cmd_build_s5), ("build-kd45", cmd_build_kd45)):
        p = cmd(name, fn, f"coloring construction of an {name[6:].upper()} model")
        p.add_argument("--model", required=True)
        p.add_argument("--agents", required=True, help="comma-separated agent names")
        p.add_argument("--out")
        p.add_argument("--cert")
    p = cmd("build-s42", cmd_build_s42, "S4.2 model for belief without knowledge")
    p.add_argument("--model", required=True)
    p.add_argument("--w0", required=True)
    p.add_argument("--s4f", action="store_true")
    p.add_argument("--agent", default="a")
    p.add_argument("--out")
    p.add_argument("--cert")
    p = cmd("unravel", cmd_unravel, "bounded unraveling around a world")
    p.add_argument("--model", required=True)
    p.add_argument("--world", required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--mode", choices=("sym", "refl"), default="sym")
    p.add_argument("--n", type=int)
    p.add_argument("--out")
    p.add_argument("--cert")
    p = cmd("equiv-partition", cmd_equiv_partition, "classes of logically equivalent worlds")
    p.add_argument("--model", required=True)
    p.add_argument("--term")
    p.add_argument("--depth", type=int)
    p = cmd("gen", cmd_gen, "seeded random model, term or formula")
    p.add_argument("--kind", choices=("kripke", "nbh", "term", "formula"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-worlds", type=int, default=4)
    p.add_argument("--max-agents", type=int, default=2)
    p.add_argument("--max-props", type=int, default=2)
    p.add_argument("--term-depth", type=int, default=3)
    p.add_argument("--formula-depth", type=int, default=3)
    p.add_argument("--class", dest="model_class")
    p.add_argument("--property", action="append")
    p.add_argument("--core", action="store_true")
    p.add_argument("--catalog", action="store_true")
    p.add_argument("--out")
    p = cmd("suite", cmd_suite, "run a property suite")
    p.add_argument("--suite", required=True, help="suite name or 'all'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int)
    p.add_argument("--max-worlds", type=int)
    p.add_argument("--log", help="write one JSON object per case here")
    return ap


def run(argv: Optional[List[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    out = Output(args, args.command)
    try:
        code = args.fn(args, out)
    except CapExceeded as e:
        out.set(error="cap", message=str(e))
        out.say(f"cap exceeded: {e}")
        code = 3
    except PreconditionError as e:
        out.set(holds=False, error="precondition", message=str(e),
                witness={"precondition": e.name, "detail": jsonable(e.detail)})
        detail = "" if e.detail is None else f"; witness {json.dumps(jsonable(e.detail))}"
        out.say(f"no: precondition {e.name} fails{detail}")
        code = 1
    except GenerationError as e:
        out.set(holds=False, error="generation", message=str(e))
        out.say(f"no: {e}")
        code = 1
    except (UsageError, BundleError, ValueError) as e:
        out.set(error="usage", message=str(e))
        if not args.json:
            stderr.write(f"bundlekit {args.command}: {e}\n")
        code = 2
    out.flush(stdout)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
