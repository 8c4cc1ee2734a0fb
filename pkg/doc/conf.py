# Configuration file for the Sphinx documentation builder.
#
# This file only contains a selection of the most common options. For a full
# list see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html


import os
import re
import shutil
import sys
from pathlib import Path

from sphinx.ext import apidoc

DOC_ROOT_DIR = Path(__file__).parent
PROJECT_ROOT_DIR = DOC_ROOT_DIR.parent
PROJECT_SRC_DIR = PROJECT_ROOT_DIR / "rd2"

sys.path.insert(0, str(PROJECT_ROOT_DIR))

# -- Project information -----------------------------------------------------

project = "rd2"
copyright = "2022, The rd2 developers"
author = "The rd2 developers"


# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.doctest",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
    "sphinx.ext.todo",
    "sphinx.ext.viewcode",
]

templates_path = ["templates"]

exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

# -- Options for HTML output -------------------------------------------------

html_theme = "sphinx_rtd_theme"

# Sphinx settings

# Don't include RST file sources
html_copy_source = False
html_show_sourcelink = False

# Hide copyright line in footer
html_show_copyright = False

napoleon_include_init_with_doc = True

autodoc_class_signature = "separated"
autodoc_typehints_format = "short"
autodoc_member_order = "bysource"
autodoc_preserve_defaults = True

# Workaround for https://github.com/sphinx-doc/sphinx/issues/10290
python_use_unqualified_type_names = True

todo_include_todos = True


def resolve_bool_env_variable(var):
    value = os.environ.get(var)
    return not (value is None or value == "0" or value.lower() == "false")


def all_files_in_tree(extension: str):
    for root, dirs, files in os.walk(PROJECT_SRC_DIR):
        for filename in files:
            if filename.endswith(extension):
                path = Path(root, filename)
                yield path, path.read_text()


def autogenerate_type_alias_mapping():
    """Map every module-level ``TypeAlias`` to its qualified name.

    Sphinx expands aliases like ``TwistDef`` into their full unions unless each
    one is listed in ``autodoc_type_aliases``. Aliases must be annotated with
    ``TypeAlias`` at module top level to be picked up.
    """
    alias_re = re.compile(r"^(\w+): TypeAlias =", re.MULTILINE)
    result = {}
    for path, src in all_files_in_tree(".py"):
        module_parts = path.with_suffix("").parts
        module = ".".join(module_parts[module_parts.index("rd2") :])
        for match in alias_re.findall(src):
            result[match] = f"{module}.{match}"
    return result


autodoc_type_aliases = autogenerate_type_alias_mapping()


def run_apidoc(_):
    output_dir = DOC_ROOT_DIR / "api"
    if output_dir.exists():
        shutil.rmtree(output_dir)
    if resolve_bool_env_variable("SKIP_APIDOC"):
        # Skip after deleting output_dir since otherwise left-over sources from prev
        # build can cause apidoc generation anyway
        print("skipping apidoc")
        return
    apidoc.main(
        [
            "--separate",
            "--force",
            "--module-first",
            "-o",
            str(output_dir),
            str(PROJECT_SRC_DIR),
        ]
    )


def setup(app):
    app.connect("builder-inited", run_apidoc)
