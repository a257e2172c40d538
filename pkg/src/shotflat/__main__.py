"""Enable running shotflat as a module: python -m shotflat"""

from .cli import main

if __name__ == '__main__':
    main()
