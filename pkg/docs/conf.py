# -*- coding: utf-8 -*-
#
# biastailor documentation Sphinx build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import sys
import os

# autodoc imports the package and cli.py from the repo root.
sys.path.insert(0, os.path.abspath('..'))


# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.napoleon',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
]

# autodoc settings
autoclass_content = 'class'
autodoc_member_order = 'bysource'
autodoc_default_options = {
    'show-inheritance': True,
    'members': True,
}

# Napoleon settings
# http://www.sphinx-doc.org/en/stable/ext/napoleon.html
napoleon_google_docstring = True
napoleon_numpy_docstring = False

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'biastailor'
copyright = '2020'

version = '0.1'
release = '0.1'

language = None

exclude_patterns = ['_build', '**/tests', '**/test_*.py', '*_live_test.py']

pygments_style = 'sphinx'
todo_include_todos = False


# -- Options for HTML output ----------------------------------------------

html_theme = 'alabaster'
html_static_path = []
html_sidebars = {
  '**': ['localtoc.html', 'searchbox.html'],
}
htmlhelp_basename = 'biastailor-doc'


# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'biastailor', 'biastailor Documentation', [], 1)
]


intersphinx_mapping = {
  'networkx': ('https://networkx.org/documentation/stable/', None),
  'numpy': ('https://numpy.org/doc/stable/', None),
  'oauth_dropins': ('https://oauth-dropins.readthedocs.io/en/latest', None),
  'python': ('https://docs.python.org/3/', None),
  'scipy': ('https://docs.scipy.org/doc/scipy/', None),
}
