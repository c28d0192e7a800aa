"""Test suite for Fair PPRL"""
