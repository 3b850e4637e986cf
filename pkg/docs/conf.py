# -*- coding: utf-8 -*-
#
# VSI Intent documentation build configuration file.
import os
import sys


sys.path.insert(0, os.path.abspath('..'))

on_rtd = os.environ.get('READTHEDOCS', None) == 'True'

extensions = ['sphinx.ext.autodoc']

templates_path = ['templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'VSI Intent'
copyright = u'2026, VSI Intent contributors'
author = u'VSI Intent contributors'

try:
    import vsi_intent
except ImportError:
    version = release = 'undefined'
else:
    version = release = vsi_intent.__version__

language = None
exclude_patterns = ['_build']
pygments_style = 'sphinx'
todo_include_todos = False

# Read the Docs injects its own theme.
if not on_rtd:
    try:
        import sphinx_rtd_theme
        html_theme = 'sphinx_rtd_theme'
        html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
    except ImportError:
        html_theme = 'default'

html_static_path = ['_static']
htmlhelp_basename = 'VsiIntentdoc'

latex_documents = [
    (master_doc, 'VsiIntent.tex', u'VSI Intent Documentation', author, 'manual'),
]

man_pages = [
    (master_doc, 'vsi-intent', u'VSI Intent Documentation', [author], 1),
]

if 'spelling' in sys.argv:
    extensions.append('sphinxcontrib.spelling')

spelling_lang = 'en_GB'
spelling_word_list_filename = 'spelling_wordlist'
spelling_ignore_pypi_package_names = True
