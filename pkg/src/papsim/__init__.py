"""papsim: photoassociation adiabatic-passage simulation toolkit."""

__version__ = "0.1.0"
