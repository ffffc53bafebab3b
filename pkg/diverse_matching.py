#!/usr/bin/env python3
"""
Main entry point for the diverse matching toolkit.
"""

if __name__ == "__main__":
    from src.cli import main
    main()
