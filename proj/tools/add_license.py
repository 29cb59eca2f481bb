#!/usr/bin/env python3
# tools/add_license.py

# Copyright 2026  The sdadapt Authors

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Prepends the project license header to sources that lack it."""
import pathlib
import sys

BODY = """{c} {path}

{c} Copyright 2026  The sdadapt Authors

{c} Licensed under the Apache License, Version 2.0 (the "License");
{c} you may not use this file except in compliance with the License.
{c} You may obtain a copy of the License at
{c}
{c}     http://www.apache.org/licenses/LICENSE-2.0
{c}
{c} Unless required by applicable law or agreed to in writing, software
{c} distributed under the License is distributed on an "AS IS" BASIS,
{c} WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
{c} See the License for the specific language governing permissions and
{c} limitations under the License.

"""


def comment_marker(f):
    if f.suffix in (".h", ".cc"):
        return "//"
    if f.suffix == ".py" or f.name == "CMakeLists.txt":
        return "#"
    return None


def add_header(f, rel):
    c = comment_marker(f)
    if c is None:
        return
    text = f.read_text()
    if "Licensed under the Apache License" in text[:1200]:
        return
    header = BODY.format(c=c, path=rel)
    if text.startswith("#!"):
        shebang, _, rest = text.partition("\n")
        f.write_text(shebang + "\n" + header + rest)
    else:
        f.write_text(header + text)


root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else ".")
add_header(root / "CMakeLists.txt", "CMakeLists.txt")
for sub in ("include", "src", "tests", "tools"):
    for f in sorted((root / sub).rglob("*")):
        if not f.is_file():
            continue
        rel = f.relative_to(root / sub) if sub in ("include", "src") else f.relative_to(root)
        rel = str(rel).removeprefix("sdadapt/")
        if f.name == "CMakeLists.txt":
            rel = str(f.relative_to(root))
        add_header(f, rel)
