# Copyright (c) 2025, ahmad mohammad and contributors
# For license information, please see license.txt

"""Petri-net engine of the app; importable without frappe"""
