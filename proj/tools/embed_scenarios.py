#!/usr/bin/env python3
"""Regenerates include/dynfair/builtin_scenarios.hpp from scenarios/*.json.

Run after editing a shipped scenario; the test suite fails if the header and
the JSON files drift apart.
"""
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent
BUILTINS = ["lending_liu", "boards_quota"]

parts = [
    "#pragma once\n",
    "// Generated by tools/embed_scenarios.py from scenarios/*.json. Do not edit.\n",
    "#include <optional>\n#include <string_view>\n",
    "namespace dynfair {\n",
]
for name in BUILTINS:
    text = (ROOT / "scenarios" / f"{name}.json").read_text(encoding="utf-8")
    parts.append(f'inline constexpr std::string_view k_{name}_scenario = R"json({text})json";\n')
parts.append("inline std::optional<std::string_view> builtin_scenario_text(std::string_view name) {\n")
for name in BUILTINS:
    parts.append(f'  if (name == "{name}") return k_{name}_scenario;\n')
parts.append("  return std::nullopt;\n}\n\n}  // namespace dynfair\n")

(ROOT / "include" / "dynfair" / "builtin_scenarios.hpp").write_text("\n".join(parts), encoding="utf-8")
