from scneuro.cli import app


def main():
    """Entry point for the scneuro command line."""
    app()


if __name__ == "__main__":
    main()
