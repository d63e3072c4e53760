"""Quantum GAN for discrete data: circuit generators trained against a classical discriminator."""

__version__ = "0.1.0"
