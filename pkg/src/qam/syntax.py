"""Textual protocol files: parser and printer.

A file holds optional channel declarations, a ``config`` block, an optional
``network`` block and an optional ``layout`` block::

    quantum c
    classical a
    config {
      membrane @Alice {
        proc: new(c); enc(c, bar(d)); dec(c, x); send(a, x); 0
        res: bar(d).e
        res: blank
      }
    }

Identifiers in channel position that are not bound variables are channels.
Undeclared channels get their kind from use: ``new``, ``enc``, ``dec`` and
``bar`` make a channel quantum, ``send`` or a lone ``recv`` make it
classical.  Binders are renamed apart so no two binders share a name.
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .netext import NetworkSpec, Policy, RateGraph
from .terms import (
    BLANK, ChannelName, Channeled, Choice, ClassicalResidue, Configuration, Decode,
    Encode, Kind, Membrane, Name, NewChannel, NIL, OpaqueMix, QamError, QuantumResidue,
    Receive, Repl, SendClassical, Seq, Var, canonical, show, show_rate, subterms,
)


class ParseError(QamError):
    def __init__(self, message, line=None, col=None):
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + message)
        self.line, self.col = line, col


@dataclass(frozen=True)
class LayoutSpec:
    bandwidth: int = 1
    regions: tuple = ()  # ((key, start, length), ...) in file order
    types: tuple = ()  # ((parameter, "C" | "Q"), ...) in file order


@dataclass
class ProtocolFile:
    config: Configuration
    network: Optional[NetworkSpec] = None
    layout: Optional[LayoutSpec] = None
    kinds: dict = field(default_factory=dict)  # channel base -> Kind.QUANTUM/CLASSICAL
    warnings: list = field(default_factory=list)

    def __eq__(self, other):
        return (isinstance(other, ProtocolFile) and self.config == other.config
                and self.network == other.network and self.layout == other.layout)


# -- lexer ----------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>\d+(?:\.\d+)?(?:/\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op><->|->|[{}()\[\];,.:=@])
""", re.VERBOSE)


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    out, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind != "ws":
            out.append(Tok(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        if "\n" in chunk:
            line += chunk.count("\n")
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    out.append(Tok("eof", "", line, pos - line_start + 1))
    return out


_KEYWORDS = {"config", "network", "layout", "quantum", "classical", "membrane", "proc",
             "res", "new", "enc", "dec", "send", "recv", "bar", "up", "rbar", "mix",
             "blank", "choice", "repl"}


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def next(self):
        t = self.tok
        self.i += 1
        return t

    def at(self, text):
        return self.tok.kind in ("id", "op") and self.tok.text == text

    def expect(self, text):
        if not self.at(text):
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.next()

    def ident(self, what="identifier"):
        t = self.tok
        if t.kind != "id" or t.text in _KEYWORDS:
            raise self.error(f"expected {what}, found {t.text or 'end of input'!r}")
        return self.next()

    def integer(self):
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            raise self.error("expected a natural number")
        self.next()
        return int(t.text)

    # raw messages: ('blank',) ('id', tok) ('bar', tok) ('dot', head, msg) ...
    def message(self):
        t = self.tok
        if self.at("blank"):
            self.next()
            return ("blank",)
        if self.at("up") or self.at("rbar"):
            self.next()
            self.expect("(")
            inner = self.message()
            self.expect(")")
            return (t.text, inner)
        if self.at("mix"):
            self.next()
            self.expect("(")
            a = self.message()
            self.expect(",")
            b = self.message()
            self.expect(")")
            return ("mix", a, b)
        head = self.channel_ref()
        if self.at("."):
            self.next()
            return ("dot", head, self.message())
        return head

    def channel_ref(self):
        if self.at("bar"):
            self.next()
            self.expect("(")
            name = self.ident("channel name")
            self.expect(")")
            return ("bar", name)
        return ("id", self.ident())

    def action(self):
        t = self.tok
        if t.text not in ("new", "enc", "dec", "send", "recv") or t.kind != "id":
            raise self.error(f"expected an action, found {t.text or 'end of input'!r}")
        self.next()
        self.expect("(")
        chan = self.channel_ref()
        arg = None
        if t.text in ("enc", "send"):
            self.expect(",")
            arg = self.message()
        elif t.text in ("dec", "recv"):
            self.expect(",")
            arg = self.ident("variable")
        self.expect(")")
        return (t.text, chan, arg, t)

    def process(self):
        if self.tok.kind == "num" and self.tok.text == "0":
            self.next()
            return ("nil",)
        if self.at("choice"):
            self.next()
            self.expect("{")
            left = self.process()
            self.expect("}")
            self.expect("{")
            right = self.process()
            self.expect("}")
            return ("choice", left, right)
        if self.at("repl"):
            self.next()
            count = 0
            if self.at("["):
                self.next()
                count = self.integer()
                self.expect("]")
            self.expect("{")
            body = self.process()
            self.expect("}")
            return ("repl", count, body)
        act = self.action()
        self.expect(";")
        return ("seq", act, self.process())

    def names(self):
        out = []
        while self.tok.kind == "id" and self.tok.text not in _KEYWORDS:
            out.append(self.next())
        return out

    def protocol(self):
        decls = {}
        membranes, network, layout = None, None, None
        while self.tok.kind != "eof":
            if self.at("quantum") or self.at("classical"):
                kind = Kind.QUANTUM if self.next().text == "quantum" else Kind.CLASSICAL
                for t in self.names():
                    if decls.get(t.text, kind) is not kind:
                        raise self.error(f"channel {t.text} declared with two kinds", t)
                    decls[t.text] = kind
            elif self.at("config"):
                if membranes is not None:
                    raise self.error("duplicate config block")
                membranes = self.config_block()
            elif self.at("network"):
                if network is not None:
                    raise self.error("duplicate network block")
                network = self.network_block()
            elif self.at("layout"):
                if layout is not None:
                    raise self.error("duplicate layout block")
                layout = self.layout_block()
            else:
                raise self.error(f"unexpected {self.tok.text!r} at top level")
        if membranes is None:
            raise self.error("missing config block")
        return decls, membranes, network, layout

    def config_block(self):
        self.expect("config")
        self.expect("{")
        membranes = []
        while not self.at("}"):
            self.expect("membrane")
            loc = None
            if self.at("@"):
                self.next()
                loc = self.ident("location").text
            self.expect("{")
            entries = []
            while not self.at("}"):
                if self.at("proc"):
                    self.next()
                    self.expect(":")
                    entries.append(("proc", self.process()))
                elif self.at("res"):
                    self.next()
                    self.expect(":")
                    entries.append(("res", self.message(), self.tok))
                else:
                    raise self.error(f"expected 'proc:' or 'res:', found {self.tok.text!r}")
            self.expect("}")
            membranes.append((loc, entries))
        self.expect("}")
        return membranes

    def network_block(self):
        self.expect("network")
        self.expect("{")
        edges, xi, binds, policy = [], {}, {}, Policy()
        while not self.at("}"):
            t = self.next()
            if t.text == "edge":
                g = self.ident("location").text
                self.expect("<->")
                h = self.ident("location").text
                self.expect("rate")
                num = self.tok
                if num.kind != "num":
                    raise self.error("expected a rate")
                self.next()
                edges.append((g, h, Fraction(num.text), num))
            elif t.text == "intent":
                n = self.integer()
                self.expect("=")
                self.expect("(")
                g = self.ident("location").text
                self.expect(",")
                h = self.ident("location").text
                self.expect(")")
                xi[n] = (g, h)
            elif t.text == "bind":
                base = self.ident("channel name").text
                self.expect("->")
                binds[base] = self.integer()
            elif t.text == "policy":
                kind = self.ident("policy").text
                agg = "sum"
                if self.at("agg"):
                    self.next()
                    agg = self.ident("aggregation").text
                try:
                    policy = Policy(kind, agg)
                except QamError as exc:
                    raise self.error(str(exc), t)
            else:
                raise self.error(f"unknown network statement {t.text!r}", t)
        self.expect("}")
        return edges, xi, binds, policy

    def layout_block(self):
        self.expect("layout")
        self.expect("{")
        bandwidth, regions, types = 1, [], []
        while not self.at("}"):
            t = self.next()
            if t.text == "bandwidth":
                bandwidth = self.integer()
            elif t.text == "region":
                if self.at("bar"):
                    self.next()
                    self.expect("(")
                    key = f"bar({self.ident().text})"
                    self.expect(")")
                else:
                    key = self.ident().text
                self.expect(".")
                key += "." + self.ident("location").text
                self.expect("=")
                regions.append((key, self.integer(), self.integer()))
            elif t.text == "type":
                name = self.ident().text
                self.expect("=")
                ty = self.next()
                if ty.text not in ("C", "Q"):
                    raise self.error("type must be C or Q", ty)
                types.append((name, ty.text))
            else:
                raise self.error(f"unknown layout statement {t.text!r}", t)
        self.expect("}")
        return LayoutSpec(bandwidth, tuple(regions), tuple(types))


# -- resolution ------------------------------------------------------------------

_QUANTUM_USES = {"new", "enc", "dec", "dot", "bar"}


def _collect_uses(raw_proc, bound, uses, free_ids):
    tag = raw_proc[0]
    if tag == "nil":
        return
    if tag == "choice":
        _collect_uses(raw_proc[1], bound, uses, free_ids)
        _collect_uses(raw_proc[2], bound, uses, free_ids)
        return
    if tag == "repl":
        _collect_uses(raw_proc[2], bound, uses, free_ids)
        return
    (verb, chan, arg, _), cont = raw_proc[1], raw_proc[2]
    if chan[0] == "bar":
        uses.setdefault(chan[1].text, set()).add(("bar", chan[1]))
    elif chan[1].text not in bound:
        uses.setdefault(chan[1].text, set()).add((verb, chan[1]))
    if verb in ("enc", "send"):
        _collect_msg_uses(arg, bound, uses, free_ids)
    if verb in ("dec", "recv"):
        bound = bound | {arg.text}
    _collect_uses(cont, bound, uses, free_ids)


def _collect_msg_uses(raw, bound, uses, free_ids):
    tag = raw[0]
    if tag == "id":
        if raw[1].text not in bound:
            free_ids.add(raw[1].text)
    elif tag == "bar":
        uses.setdefault(raw[1].text, set()).add(("bar", raw[1]))
    elif tag == "dot":
        head = raw[1]
        if head[0] == "bar" or head[1].text not in bound:
            uses.setdefault(head[1].text, set()).add(("dot" if head[0] == "id" else "bar", head[1]))
        _collect_msg_uses(raw[2], bound, uses, free_ids)
    elif tag in ("up", "rbar"):
        _collect_msg_uses(raw[1], bound, uses, free_ids)
    elif tag == "mix":
        _collect_msg_uses(raw[1], bound, uses, free_ids)
        _collect_msg_uses(raw[2], bound, uses, free_ids)


def _infer_kinds(decls, uses):
    kinds = dict(decls)
    for base, occ in sorted(uses.items()):
        verbs = {v for v, _ in occ}
        first = min((t for _, t in occ), key=lambda t: (t.line, t.col))
        quantum = verbs & _QUANTUM_USES
        if base in decls:
            kind = decls[base]
            if kind is Kind.CLASSICAL and quantum:
                bad = min((t for v, t in occ if v in _QUANTUM_USES), key=lambda t: (t.line, t.col))
                raise ParseError(f"classical channel {base} used in a quantum position",
                                 bad.line, bad.col)
            if kind is Kind.QUANTUM and "send" in verbs:
                bad = min((t for v, t in occ if v == "send"), key=lambda t: (t.line, t.col))
                raise ParseError(f"quantum channel {base} used to send a classical message",
                                 bad.line, bad.col)
            continue
        if quantum and "send" in verbs:
            raise ParseError(f"channel {base} used both as quantum and classical",
                             first.line, first.col)
        kinds[base] = Kind.QUANTUM if quantum else Kind.CLASSICAL
    return kinds


class _Resolver:
    def __init__(self, kinds, bindings):
        self.kinds = kinds
        self.bindings = bindings
        self.used = set(kinds)
        self.binder_names = set()

    def channel(self, base, tok, projective=False):
        kind = self.kinds.get(base)
        if kind is None:
            raise ParseError(f"unknown channel {base}", tok.line, tok.col)
        if projective:
            if kind is not Kind.QUANTUM:
                raise ParseError(f"bar({base}) of a classical channel", tok.line, tok.col)
            return ChannelName(Kind.PROJECTIVE, base)
        if kind is Kind.QUANTUM:
            return ChannelName(Kind.QUANTUM, base, self.bindings.get(base))
        return ChannelName(kind, base)

    def fresh(self, name):
        if name not in self.binder_names and name not in self.used:
            out = name
        else:
            k = 1
            while f"{name}_{k}" in self.binder_names or f"{name}_{k}" in self.used:
                k += 1
            out = f"{name}_{k}"
        self.binder_names.add(out)
        return out

    def channel_ref(self, raw, scope):
        if raw[0] == "bar":
            return self.channel(raw[1].text, raw[1], projective=True)
        name = raw[1].text
        if name in scope:
            return Var(scope[name])
        return self.channel(name, raw[1])

    def message(self, raw, scope):
        tag = raw[0]
        if tag == "blank":
            return BLANK
        if tag == "id":
            name = raw[1].text
            if name in scope:
                return Var(scope[name])
            if name in self.kinds:
                return self.channel(name, raw[1])
            return Name(name)
        if tag == "bar":
            return self.channel(raw[1].text, raw[1], projective=True)
        if tag == "dot":
            head = self.channel_ref(raw[1], scope)
            if isinstance(head, Var):
                t = raw[1][1]
                raise ParseError(f"variable {t.text} used as a message channel", t.line, t.col)
            return Channeled(head, self.message(raw[2], scope))
        if tag == "up":
            return QuantumResidue(self.message(raw[1], scope))
        if tag == "rbar":
            return ClassicalResidue(self.message(raw[1], scope))
        return OpaqueMix(self.message(raw[1], scope), self.message(raw[2], scope))

    def process(self, raw, scope):
        tag = raw[0]
        if tag == "nil":
            return NIL
        if tag == "choice":
            return Choice(self.process(raw[1], scope), self.process(raw[2], scope))
        if tag == "repl":
            return Repl(self.process(raw[2], scope), raw[1])
        (verb, chan, arg, tok), cont = raw[1], raw[2]
        ch = self.channel_ref(chan, scope)
        if verb == "new":
            return Seq(NewChannel(ch), self.process(cont, scope))
        if verb in ("enc", "send"):
            if isinstance(ch, ChannelName):
                if verb == "enc" and ch.kind is Kind.CLASSICAL:
                    raise ParseError(f"classical channel {ch.base} in encode position",
                                     tok.line, tok.col)
            act = (Encode if verb == "enc" else SendClassical)(ch, self.message(arg, scope))
            return Seq(act, self.process(cont, scope))
        var = self.fresh(arg.text)
        inner = dict(scope)
        inner[arg.text] = var
        act = (Decode if verb == "dec" else Receive)(ch, var)
        return Seq(act, self.process(cont, inner))


def parse(text: str) -> ProtocolFile:
    """Parse protocol text into a canonical configuration plus optional blocks."""
    p = _Parser(text)
    decls, membranes, network, layout = p.protocol()
    uses, free_ids = {}, set()
    for _, entries in membranes:
        for entry in entries:
            if entry[0] == "proc":
                _collect_uses(entry[1], frozenset(), uses, free_ids)
            else:
                _collect_msg_uses(entry[1], frozenset(), uses, free_ids)
    kinds = _infer_kinds(decls, uses)
    caught = []
    spec = None
    if network is not None:
        edges, xi, binds, policy = network
        with warnings.catch_warnings(record=True) as rec:
            warnings.simplefilter("always")
            theta = RateGraph.from_edges([(g, h, r) for g, h, r, _ in edges])
        for w in rec:
            caught.append(str(w.message))
            warnings.warn(w.message, w.category, stacklevel=2)
        for base in binds:
            if kinds.get(base) is not Kind.QUANTUM:
                raise ParseError(f"bind of non-quantum channel {base}")
        spec = NetworkSpec(theta, tuple(sorted(xi.items())), policy, tuple(sorted(binds.items())))
        bindings = binds
    else:
        bindings = {}
    resolver = _Resolver(kinds, bindings)
    resolver.used |= free_ids
    out = []
    for loc, entries in membranes:
        mols = []
        for entry in entries:
            if entry[0] == "proc":
                mols.append(resolver.process(entry[1], {}))
            else:
                res = resolver.message(entry[1], {})
                if not (res == BLANK or isinstance(res, Channeled)):
                    t = entry[2]
                    raise ParseError(f"resource {show(res)} is neither blank nor channelled",
                                     t.line, t.col)
                mols.append(res)
        out.append(Membrane(tuple(mols), loc))
    config = canonical(Configuration(tuple(out)))
    return ProtocolFile(config, spec, layout, kinds, caught)


# -- printing ---------------------------------------------------------------------

def channel_kinds(config: Configuration) -> dict:
    kinds = {}
    for m in config.membranes:
        for mol in m.molecules:
            for t in subterms(mol):
                if isinstance(t, ChannelName):
                    kinds[t.base] = Kind.CLASSICAL if t.kind is Kind.CLASSICAL else Kind.QUANTUM
    return kinds


def print_protocol(pf: ProtocolFile) -> str:
    kinds = dict(pf.kinds)
    kinds.update(channel_kinds(pf.config))
    lines = []
    for kind, word in ((Kind.QUANTUM, "quantum"), (Kind.CLASSICAL, "classical")):
        names = sorted(b for b, k in kinds.items() if k is kind)
        if names:
            lines.append(f"{word} " + " ".join(names))
    lines.append("config {")
    for m in pf.config.membranes:
        loc = f" @{m.location}" if m.location is not None else ""
        lines.append(f"  membrane{loc} {{")
        for mol in m.molecules:
            tag = "res" if mol == BLANK or isinstance(mol, Channeled) else "proc"
            lines.append(f"    {tag}: {show(mol)}")
        lines.append("  }")
    lines.append("}")
    if pf.network is not None:
        net = pf.network
        lines.append("network {")
        for g, h, p in net.theta.edges:
            lines.append(f"  edge {g} <-> {h} rate {show_rate(p)}")
        for n, (g, h) in net.xi:
            lines.append(f"  intent {n} = ({g}, {h})")
        for base, n in net.bindings:
            lines.append(f"  bind {base} -> {n}")
        agg = net.policy.aggregation
        agg = f" agg {agg}" if net.policy.kind == "qcast" or agg != "sum" else ""
        lines.append(f"  policy {net.policy.kind}{agg}")
        lines.append("}")
    if pf.layout is not None:
        lay = pf.layout
        lines.append("layout {")
        lines.append(f"  bandwidth {lay.bandwidth}")
        for key, i, n in lay.regions:
            lines.append(f"  region {key} = {i} {n}")
        for name, ty in lay.types:
            lines.append(f"  type {name} = {ty}")
        lines.append("}")
    return "\n".join(lines) + "\n"


def load(path) -> ProtocolFile:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
