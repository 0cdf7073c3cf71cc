"""Minimal ordered XML tree with deterministic serialization."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple, Union
from xml.sax.saxutils import escape, quoteattr

INDENT = "   "
MEI_NS = "http://www.music-encoding.org/ns/mei"
XML_NS = "http://www.w3.org/XML/1998/namespace"


class SerializationFailure(Exception):
    code = "SerializationFailure"


@dataclass
class XmlNode:
    name: str
    attributes: List[Tuple[str, str]] = field(default_factory=list)
    children: List[Union["XmlNode", str]] = field(default_factory=list)

    def set(self, key: str, value) -> "XmlNode":
        if value is None:
            return self
        if isinstance(value, bool):
            value = "true" if value else "false"
        for i, (k, _) in enumerate(self.attributes):
            if k == key:
                self.attributes[i] = (key, str(value))
                return self
        self.attributes.append((key, str(value)))
        return self

    def get(self, key: str, default=None) -> Optional[str]:
        for k, v in self.attributes:
            if k == key:
                return v
        return default

    def add(self, child: Union["XmlNode", str]) -> Union["XmlNode", str]:
        self.children.append(child)
        return child

    def sub(self, name: str, *attrs: Tuple[str, object], text: Optional[str] = None) -> "XmlNode":
        node = XmlNode(name)
        for k, v in attrs:
            node.set(k, v)
        if text is not None:
            node.children.append(text)
        self.children.append(node)
        return node

    @property
    def text(self) -> str:
        return "".join(c for c in self.children if isinstance(c, str))

    def elements(self) -> List["XmlNode"]:
        return [c for c in self.children if isinstance(c, XmlNode)]

    def iter(self, name: Optional[str] = None) -> Iterator["XmlNode"]:
        if name is None or self.name == name:
            yield self
        for c in self.elements():
            yield from c.iter(name)

    def find(self, name: str) -> Optional["XmlNode"]:
        return next(self.iter(name), None)


def serialize(node: XmlNode) -> bytes:
    """UTF-8 bytes with an XML declaration, 3-space indentation and attributes in insertion order."""
    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    _write(node, 0, lines)
    return ("\n".join(lines) + "\n").encode("utf-8")


def _write(node: XmlNode, depth: int, lines: List[str]) -> None:
    pad = INDENT * depth
    seen = set()
    attrs = []
    for k, v in node.attributes:
        if k in seen:
            raise SerializationFailure(f"duplicate attribute {k!r} on <{node.name}>")
        seen.add(k)
        attrs.append(f" {k}={quoteattr(v)}")
    head = f"{pad}<{node.name}{''.join(attrs)}"
    if not node.children:
        lines.append(head + "/>")
    elif all(isinstance(c, str) for c in node.children):
        lines.append(f"{head}>{escape(node.text)}</{node.name}>")
    else:
        lines.append(head + ">")
        for c in node.children:
            if isinstance(c, str):
                if c.strip():
                    lines.append(INDENT * (depth + 1) + escape(c.strip()))
            else:
                _write(c, depth + 1, lines)
        lines.append(f"{pad}</{node.name}>")


def from_bytes(data: bytes) -> XmlNode:
    """Read XML back into an :class:`XmlNode`; only the root keeps its default namespace."""
    el = ET.fromstring(data)
    node = _convert(el)
    if el.tag.startswith("{"):
        node.attributes.insert(0, ("xmlns", el.tag[1:].split("}", 1)[0]))
    return node


def _qname(name: str) -> str:
    if name.startswith("{"):
        uri, local = name[1:].split("}", 1)
        return f"xml:{local}" if uri == XML_NS else local
    return name


def _convert(el) -> XmlNode:
    node = XmlNode(_qname(el.tag), [(_qname(k), v) for k, v in el.attrib.items()])
    if el.text and el.text.strip():
        node.children.append(el.text.strip())
    for c in el:
        if not isinstance(c.tag, str):
            continue
        node.children.append(_convert(c))
        if c.tail and c.tail.strip():
            node.children.append(c.tail.strip())
    return node
