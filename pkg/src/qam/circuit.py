"""Compilation of configurations to a concurrent gate-level circuit IR.

Each process molecule becomes one instruction sequence tagged with its
membrane location.  Qubits are laid out in regions keyed ``param.location``:
``c.Alice`` is Alice's party of channel ``c`` and ``bar(d).Alice`` the
qubits of Alice's resource ``bar(d).e``.  Classical data lives in named bit
registers; a decode of width ``n`` writes ``2n`` bits (message bits first,
then channel bits).

The default quantum encoder is ``CX msg chan; H msg``, which is what makes
teleportation come out right.  ``strict_paper_gates`` emits the rules as
originally printed instead (``H chan; CX msg chan`` and one control bit for
both corrections).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .terms import (
    Blank, ChannelName, Channeled, Choice, Configuration, Decode, Encode, Kind,
    Name, NewChannel, Nil, QamError, Receive, Repl, SendClassical, Seq, Var, is_classical,
    show, subterms,
)


class CompileError(QamError):
    pass


# -- instructions ----------------------------------------------------------------

@dataclass(frozen=True)
class H:
    q: int

    def __str__(self):
        return f"H {self.q}"


@dataclass(frozen=True)
class CX:
    control: int
    target: int

    def __str__(self):
        return f"CX {self.control} {self.target}"


@dataclass(frozen=True)
class CZ:
    control: int
    target: int

    def __str__(self):
        return f"CZ {self.control} {self.target}"


@dataclass(frozen=True)
class CCX:
    """X on ``q`` controlled by a classical bit ``reg[index]``."""
    reg: str
    index: int
    q: int

    def __str__(self):
        return f"CCX {self.reg}[{self.index}] {self.q}"


@dataclass(frozen=True)
class CCZ:
    reg: str
    index: int
    q: int

    def __str__(self):
        return f"CCZ {self.reg}[{self.index}] {self.q}"


@dataclass(frozen=True)
class Meas:
    q: int
    reg: str
    index: int

    def __str__(self):
        return f"Meas {self.q} -> {self.reg}[{self.index}]"


@dataclass(frozen=True)
class Send:
    chan: str
    payload: str

    def __str__(self):
        return f"send({self.chan}, {self.payload})"


@dataclass(frozen=True)
class Wait:
    chan: str
    var: str

    def __str__(self):
        return f"wait({self.chan}, {self.var})"


# -- environments ------------------------------------------------------------------

@dataclass
class LayoutEnv:
    """Qubit regions: key -> (start, length)."""
    regions: dict = field(default_factory=dict)
    bandwidth: int = 1

    def __post_init__(self):
        spans = sorted((s, s + n, k) for k, (s, n) in self.regions.items())
        for (s1, e1, k1), (s2, _, k2) in zip(spans, spans[1:]):
            if s2 < e1:
                raise CompileError(f"regions {k1} and {k2} overlap")
        for k, (s, n) in self.regions.items():
            if s < 0 or n <= 0 or n % self.bandwidth:
                raise CompileError(f"region {k} = ({s}, {n}) is not a positive multiple "
                                   f"of bandwidth {self.bandwidth}")

    def __getitem__(self, key) -> tuple:
        if key not in self.regions:
            raise CompileError(f"no layout region for {key}")
        return self.regions[key]

    def __contains__(self, key):
        return key in self.regions

    @property
    def total(self) -> int:
        return max((s + n for s, n in self.regions.values()), default=0)


@dataclass
class TypingEnv:
    """Parameter -> 'C' (classical) or 'Q' (quantum)."""
    types: dict = field(default_factory=dict)

    def __getitem__(self, param):
        if param not in self.types:
            raise CompileError(f"parameter {param} missing from the typing environment")
        return self.types[param]


@dataclass
class CircuitProgram:
    processes: list  # [(location, (instruction, ...)), ...]
    total_qubits: int
    layout: LayoutEnv = field(default_factory=LayoutEnv)

    def to_text(self) -> str:
        lines = [f"# qubits: {self.total_qubits}"]
        for loc, body in self.processes:
            lines.append(f"# location: {loc}")
            lines.extend(str(i) for i in body)
        return "\n".join(lines) + "\n"


@dataclass
class Context:
    """Facts about the whole configuration that single processes need.

    ``lft``/``rht`` give the location of each end of a channel (the ``lft``
    end creates the pair); ``content`` is what gets encoded into each
    quantum channel.
    """
    lft: dict = field(default_factory=dict)
    rht: dict = field(default_factory=dict)
    content: dict = field(default_factory=dict)


def param(term) -> Optional[str]:
    """The parameter a payload is typed and laid out by."""
    if isinstance(term, ChannelName):
        return show(term)
    if isinstance(term, Var):
        return term.name
    for t in subterms(term):
        if isinstance(t, (Name, Var)):
            return t.name
        if isinstance(t, ChannelName) and t is not term:
            return show(t)
    return None


def _actions(p):
    """Actions of a process in program order (both branches of a choice)."""
    if isinstance(p, Seq):
        yield p.action
        yield from _actions(p.cont)
    elif isinstance(p, Choice):
        yield from _actions(p.left)
        yield from _actions(p.right)
    elif isinstance(p, Repl):
        yield from _actions(p.body)


def _located(config: Configuration) -> list:
    for i, m in enumerate(config.membranes):
        if m.location is None:
            raise CompileError(f"membrane #{i} has no location")
    return [m.location for m in config.membranes]


def build_context(config: Configuration) -> Context:
    ctx = Context()
    ends: dict = {}
    for loc, m in zip(_located(config), config.membranes):
        for p in m.processes():
            for a in _actions(p):
                if isinstance(a, NewChannel) and loc not in ends.setdefault(a.channel.base, []):
                    ends[a.channel.base].append(loc)
                if (isinstance(a, Encode) and isinstance(a.channel, ChannelName)
                        and a.channel.kind is Kind.QUANTUM):
                    ctx.content.setdefault(a.channel.base, a.payload)
    for base, locs in ends.items():
        ctx.lft[base] = locs[0]
        if len(locs) > 1:
            ctx.rht[base] = locs[1]
    return ctx


def infer_types(config: Configuration, overrides=()) -> TypingEnv:
    types: dict = {}
    for m in config.membranes:
        for p in m.processes():
            for a in _actions(p):
                if isinstance(a, Decode):
                    types[a.var] = "C"
                elif isinstance(a, Receive):
                    quantum = isinstance(a.channel, ChannelName) and a.channel.kind is Kind.QUANTUM
                    types[a.var] = "Q" if quantum else "C"
                elif isinstance(a, (Encode, SendClassical)):
                    key = param(a.payload)
                    if key is None or key in types:
                        continue
                    if isinstance(a.payload, (ChannelName, Var)):
                        types[key] = "Q" if isinstance(a.payload, ChannelName) else "C"
                    else:
                        types[key] = "C" if is_classical(a.payload) else "Q"
    types.update(dict(overrides))
    return TypingEnv(types)


def default_layout(config: Configuration, bandwidth: int = 1, fixed=()) -> LayoutEnv:
    """First-fit regions of width ``bandwidth`` for every quantum resource.

    Blank resources of a membrane are handed to its channel creations in
    program order; ``fixed`` regions ((key, start, length), ...) are placed
    first and keep their positions.
    """
    if bandwidth <= 0:
        raise CompileError("bandwidth must be positive")
    regions = {k: (s, n) for k, s, n in fixed}
    LayoutEnv(dict(regions), bandwidth)
    taken = sorted(regions.values())
    for loc, m in zip(_located(config), config.membranes):
        created = [a.channel.base for p in m.processes() for a in _actions(p)
                   if isinstance(a, NewChannel)]
        keys = []
        for r in m.resources():
            if isinstance(r, Blank):
                keys.append(f"{created.pop(0)}.{loc}" if created else f"blank{len(keys)}.{loc}")
            elif isinstance(r, Channeled):
                keys.append(f"{show(r.channel)}.{loc}")
        if created:
            raise CompileError(f"no blank resource left at {loc} for new({created[0]})")
        for key in keys:
            if key in regions:
                continue
            start = 0
            for s, n in taken:
                if start + bandwidth <= s:
                    break
                start = max(start, s + n)
            regions[key] = (start, bandwidth)
            taken = sorted(taken + [(start, bandwidth)])
    return LayoutEnv(regions, bandwidth)


# -- compilation ------------------------------------------------------------------

class _ProcessCompiler:
    def __init__(self, omega: TypingEnv, sigma: LayoutEnv, g: str, ctx: Context,
                 strict: bool):
        self.omega, self.sigma, self.g, self.ctx, self.strict = omega, sigma, g, ctx, strict
        self.alias: dict = {}
        self.projective: dict = {}  # variable -> channel base it names the bar of
        self.out: list = []

    def region(self, key) -> tuple:
        seen = set()
        while key in self.alias and key not in seen:
            seen.add(key)
            key = self.alias[key]
        return self.sigma[key]

    def channel_key(self, ch) -> tuple:
        """(region key, channel base, projective?) for a channel reference."""
        if isinstance(ch, Var):
            if ch.name not in self.projective:
                raise CompileError(f"{ch.name} is not bound to a channel at {self.g}")
            base = self.projective[ch.name]
            return f"{base}.{self.g}", base, True
        key = f"{show(ch)}.{self.g}"
        if ch.kind is Kind.PROJECTIVE and key not in self.sigma and key not in self.alias:
            key = f"{ch.base}.{self.g}"
        return key, ch.base, ch.kind is Kind.PROJECTIVE

    def payload_key(self, payload) -> str:
        if isinstance(payload, ChannelName):
            return f"{show(payload)}.{self.g}"
        if isinstance(payload, Var) and payload.name in self.alias:
            return payload.name
        raise CompileError(f"no qubits known for payload {show(payload)} at {self.g}")

    def content_type(self, base) -> Optional[str]:
        content = self.ctx.content.get(base)
        if content is None or param(content) is None:
            return None
        return self.omega[param(content)]

    def new(self, c: ChannelName):
        if self.ctx.lft.get(c.base) != self.g:
            return
        if c.base not in self.ctx.rht:
            raise CompileError(f"channel {c.base} has no second end")
        i, n = self.region(f"{c.base}.{self.g}")
        j, m = self.region(f"{c.base}.{self.ctx.rht[c.base]}")
        if n != m:
            raise CompileError(f"the two ends of {c.base} differ in width")
        for x in range(n):
            self.out += [H(i + x), CX(i + x, j + x)]

    def encode(self, a: Encode):
        key, base, projective = self.channel_key(a.channel)
        i, n = self.region(key)
        p = param(a.payload)
        if self.omega[p] == "Q":
            s, w = self.region(self.payload_key(a.payload))
            if w > n:
                raise CompileError(f"payload {show(a.payload)} ({w} qubits) overflows "
                                   f"channel {show(a.channel)} ({n} qubits)")
            for x in range(w):
                if self.strict:
                    self.out += [H(i + x), CX(s + x, i + x)]
                else:
                    self.out += [CX(s + x, i + x), H(s + x)]
            return
        if projective and self.content_type(base) == "C":
            self.out.append(Send(f"bar({base})", p))
            return
        for x in range(n):
            if self.strict:
                self.out += [CCX(p, x, i + x), CCZ(p, x, i + x)]
            else:
                self.out += [CCX(p, n + x, i + x), CCZ(p, x, i + x)]
        content = self.ctx.content.get(base)
        if projective and isinstance(content, ChannelName):
            self.alias[f"{show(content)}.{self.g}"] = key

    def decode(self, a: Decode):
        self.omega[a.var]  # every binder must be typed
        key, base, _ = self.channel_key(a.channel)
        i, n = self.region(key)
        kind = self.content_type(base)
        if kind == "C":
            other = self.ctx.rht if self.ctx.lft.get(base) == self.g else self.ctx.lft
            j, _ = self.region(f"{base}.{other[base]}")
            for x in range(n):
                self.out += [CX(i + x, j + x), H(i + x)]
            self.out += [Meas(i + x, a.var, x) for x in range(n)]
            self.out += [Meas(j + x, a.var, n + x) for x in range(n)]
        else:
            w = 0
            if kind == "Q":
                s, w = self.region(self.payload_key(self.ctx.content[base]))
                self.out += [Meas(s + x, a.var, x) for x in range(w)]
            self.out += [Meas(i + x, a.var, w + x) for x in range(n)]
        self.out.append(Send(base, f"bar({base})"))

    def receive(self, a: Receive):
        self.omega[a.var]  # every binder must be typed
        ch = a.channel
        if isinstance(ch, Var):
            base = self.projective.get(ch.name)
            if base is None:
                raise CompileError(f"{ch.name} is not bound to a channel at {self.g}")
            self.out.append(Wait(f"bar({base})", a.var))
            return
        self.out.append(Wait(show(ch), a.var))
        if ch.kind is Kind.QUANTUM:
            self.projective[a.var] = ch.base
            self.alias[a.var] = f"{ch.base}.{self.g}"

    def run(self, p) -> list:
        while not isinstance(p, Nil):
            if not isinstance(p, Seq):
                raise CompileError(f"{type(p).__name__} has no circuit translation")
            a = p.action
            if isinstance(a, NewChannel):
                self.new(a.channel)
            elif isinstance(a, Encode):
                self.encode(a)
            elif isinstance(a, Decode):
                self.decode(a)
            elif isinstance(a, Receive):
                self.receive(a)
            elif isinstance(a, SendClassical):
                self.out.append(Send(show(a.channel), param(a.payload) or show(a.payload)))
            p = p.cont
        return self.out


def compile_process(omega: TypingEnv, sigma: LayoutEnv, g: str, process,
                    context: Optional[Context] = None, strict_paper_gates: bool = False) -> list:
    ctx = context if context is not None else Context()
    return _ProcessCompiler(omega, sigma, g, ctx, strict_paper_gates).run(process)


def compile_config(config: Configuration, omega: Optional[TypingEnv] = None,
                   sigma: Optional[LayoutEnv] = None, bandwidth: int = 1,
                   strict_paper_gates: bool = False, layout=None) -> CircuitProgram:
    """Compile every process molecule; ``layout`` is a parsed layout block."""
    if layout is not None:
        bandwidth = layout.bandwidth if bandwidth == 1 else bandwidth
    if sigma is None:
        sigma = default_layout(config, bandwidth, layout.regions if layout else ())
    if omega is None:
        omega = infer_types(config, layout.types if layout else ())
    ctx = build_context(config)
    procs = []
    for loc, m in zip(_located(config), config.membranes):
        for p in m.processes():
            body = compile_process(omega, sigma, loc, p, ctx, strict_paper_gates)
            procs.append((loc, tuple(body)))
    _check_program(procs, sigma.total)
    return CircuitProgram(procs, sigma.total, sigma)


def _check_program(procs, total):
    sends = {i.chan for _, body in procs for i in body if isinstance(i, Send)}
    for loc, body in procs:
        for i in body:
            for q in (getattr(i, f, None) for f in ("q", "control", "target")):
                if q is not None and not 0 <= q < total:
                    raise CompileError(f"qubit {q} outside the {total}-qubit layout at {loc}")
            if isinstance(i, Wait) and i.chan not in sends:
                raise CompileError(f"wait({i.chan}, {i.var}) at {loc} has no matching send")
