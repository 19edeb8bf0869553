from src.app_controller import cli

if __name__ == "__main__":
    cli()
