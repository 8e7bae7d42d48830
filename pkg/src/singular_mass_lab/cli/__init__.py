# CLI module for Singular Mass Lab
