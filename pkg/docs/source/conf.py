# Configuration file for the Sphinx documentation builder.

# -- Project information -----------------------------------------------------

import qaoa_qng

project = "qaoa-qng"
copyright = "qaoa-qng developers"
author = "qaoa-qng developers"
html_title = "qaoa-qng documentation"

version = qaoa_qng.__version__
release = version

# -- General configuration ---------------------------------------------------

extensions = [
    "numpydoc",
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.doctest",
    "sphinx.ext.duration",
    "sphinx.ext.extlinks",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
    "sphinx_copybutton",
    "sphinx_toolbox.code",
    "sphinx_toolbox.collapse",
]

pygments_style = "vs"
docutils_tab_width = 4

html_theme = "alabaster"

intersphinx_mapping = {
    "python": ("https://docs.python.org/3/", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
    "pandas": ("https://pandas.pydata.org/pandas-docs/stable/", None),
}

intersphinx_disabled_domains = ["std"]

templates_path = ["_templates"]

autodoc_typehints = "none"

copybutton_prompt_text = ">>> "

extlinks_detect_hardcoded_links = True
extlinks = {
    "pypi": ("https://pypi.org/project/%s/", "%s"),
}

# -- numpydoc magic linking

numpydoc_xref_param_type = True
numpydoc_xref_aliases = {
    "DataFrame": "pandas.DataFrame",
    "Series": "pandas.Series",
    "TfimSpec": "qaoa_qng.tfim.TfimSpec",
    "QaoaParams": "qaoa_qng.ansatz.QaoaParams",
    "RunResult": "qaoa_qng.optimizers.RunResult",
    "Backend": "qaoa_qng.backends.Backend",
}
numpydoc_xref_ignore = {"optional", "or", "of", "array_like", "callable"}
numpydoc_class_members_toctree = False

# -- Options for EPUB output

epub_show_urls = "footnote"
