"""Entry point module for running the lab as ``python -m sine_gordon_lab``.

It behaves exactly like the installed console script:

```bash
python -m sine_gordon_lab run --config renorm.json
```
"""

from sine_gordon_lab.cli import main

if __name__ == "__main__":
    main()
