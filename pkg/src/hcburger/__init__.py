"""Simulation toolkit for the hamburger-cheeseburger inventory model and its Brownian limit."""
