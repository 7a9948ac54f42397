# Sphinx configuration for the qcw documentation.

import os
import sys
sys.path.insert(0, os.path.abspath('../../'))

# -- Project information -----------------------------------------------------

project = 'Quantum Certificate Workbench'
author = 'QCW Team'
copyright = f'2025-2026, {author}'
release = '0.1.0'
version = '0.1'

html_title = f"{project} v{version}"
html_short_title = "qcw"

# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.napoleon',
    'sphinx.ext.viewcode',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
    'myst_parser',
    'sphinx_copybutton',
]

templates_path = ['_templates']
exclude_patterns = []

# Kernel modules are documented in source order, which follows their section banners
autodoc_member_order = 'bysource'
autodoc_typehints = 'description'
autodoc_default_options = {
    'members': True,
    'show-inheritance': True,
}

# -- Options for HTML output -------------------------------------------------

html_theme = 'pydata_sphinx_theme'
html_static_path = []

html_theme_options = {
    "show_nav_level": 2,
    "navigation_depth": 3,
    "logo": {
        "text": "qcw",
    },
    "collapse_navigation": False,
}

# -- Extension configuration -------------------------------------------------

# Docstrings are Google style
napoleon_google_docstring = True
napoleon_numpy_docstring = False
napoleon_include_init_with_doc = True
napoleon_use_rtype = False
napoleon_attr_annotations = True

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/', None),
    'networkx': ('https://networkx.org/documentation/stable/', None),
    'pandas': ('https://pandas.pydata.org/docs/', None),
}

myst_enable_extensions = [
    "colon_fence",
    "deflist",
    "substitution",
]
myst_substitutions = {
    "cli": "qcw",
    "corpus": "configs/corpus",
}

# Shell prompts in the getting-started pages
copybutton_prompt_text = r"\$ "
copybutton_prompt_is_regexp = True
