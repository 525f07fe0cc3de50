"""Packaged data files: the phrase table and the composition rule table."""
